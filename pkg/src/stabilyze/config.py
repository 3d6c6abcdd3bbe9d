"""Run configuration: an INI-style file with a fixed set of sections and keys.

Every diagnostic names the section, key and line.  Three kinds of problems
are distinguished: unknown keys or sections, values of the wrong type, and
values that parse but violate a constraint.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .modal import (
    GAMMA_LIMIT,
    MODELS,
    Dirichlet,
    ExplicitList,
    Geometric,
    LogGrid,
    SpectrumSpec,
    SystemParams,
)
from .spectral import ClassifyOptions


class ConfigError(ValueError):
    def __init__(self, message, section=None, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.section, self.key, self.line = section, key, line


class UnknownKeyError(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass


class ConstraintError(ConfigError):
    pass


# key -> parser kind
SCHEMA = {
    "model": {"name": "choice"},
    "params": {
        "rho1": "float",
        "rho2": "float",
        "rho3": "float",
        "a": "float",
        "b": "float",
        "c": "float",
        "delta": "float",
        "gamma": "float",
        "chi": "float",
    },
    "sweep": {
        "gamma_values": "floats",
        "gamma_range": "floats",
        "gamma_step": "float",
        "chi_values": "floats",
        "chi_range": "floats",
        "chi_step": "float",
    },
    "spectrum": {
        "kind": "choice",
        "ell": "float",
        "n_max": "int",
        "alpha_min": "float",
        "alpha_max": "float",
        "count": "int",
        "alpha0": "float",
        "ratio": "float",
        "values": "floats",
    },
    "scan": {
        "n_lambda": "int",
        "lambda_min": "float",
        "margin_threshold": "float",
        "abscissa_threshold": "float",
        "decay_threshold": "float",
        "trend_threshold": "float",
        "growth_threshold": "float",
        "fit_decades": "float",
        "t_max": "float",
        "n_times": "int",
        "alpha": "float",
        "initial": "floats",
    },
    "output": {"dir": "str", "workers": "int"},
}

CHOICES = {
    ("model", "name"): MODELS,
    ("spectrum", "kind"): ("dirichlet", "loggrid", "geometric", "list"),
}

SPECTRUM_KEYS = {
    "dirichlet": {"ell", "n_max"},
    "loggrid": {"alpha_min", "alpha_max", "count"},
    "geometric": {"alpha0", "ratio", "count"},
    "list": {"values"},
}


@dataclass
class RunConfig:
    model: str = "timoshenko"
    params: SystemParams = field(default_factory=SystemParams)
    chi: Optional[float] = None  # when set, b is derived from chi
    gamma_values: tuple = ()
    chi_values: tuple = ()
    spectrum: SpectrumSpec = field(default_factory=lambda: LogGrid(1.0, 1e8, 400))
    options: ClassifyOptions = field(default_factory=ClassifyOptions)
    t_max: float = 1e3
    n_times: int = 60
    alpha: float = 1.0
    initial: Optional[tuple] = None
    out_dir: str = "."
    workers: int = 1

    @property
    def has_sweep(self) -> bool:
        return bool(self.gamma_values or self.chi_values)

    def points(self) -> list:
        """``(gamma, chi, params)`` for every run point, sorted by key."""
        gammas = self.gamma_values or (self.params.gamma,)
        if self.chi_values:
            chis = self.chi_values
        elif self.chi is not None:
            chis = (self.chi,)
        else:
            chis = (None,)
        out = []
        for g in gammas:
            for x in chis:
                p = point_params(self.params, g, x)
                out.append((float(g), p.chi if x is None else float(x), p))
        out.sort(key=lambda r: (r[0], r[1]))
        return out


def point_params(base: SystemParams, gamma: float, chi: Optional[float]) -> SystemParams:
    if chi is None:
        return base.replace(gamma=gamma)
    return SystemParams.with_chi(
        chi,
        rho1=base.rho1,
        rho2=base.rho2,
        a=base.a,
        rho3=base.rho3,
        c=base.c,
        delta=base.delta,
        gamma=gamma,
    )


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    """``(section, key) -> line number`` and ``(section, None) -> line``."""
    index = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(raw)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), n)
            continue
        m = _KEY_RE.match(raw)
        if m and section is not None and not raw[:1].isspace():
            index.setdefault((section, m.group(1).strip().lower()), n)
    return index


def _convert(kind, raw, where):
    try:
        if kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == "int":
            return int(raw)
        if kind == "floats":
            parts = [s for s in re.split(r"[,\s]+", raw.strip()) if s]
            if not parts:
                raise ValueError
            vals = tuple(float(s) for s in parts)
            if not all(math.isfinite(v) for v in vals):
                raise ValueError
            return vals
        return raw.strip()
    except ValueError:
        expected = {"float": "a number", "int": "an integer", "floats": "a list of numbers"}.get(kind, kind)
        raise ConfigTypeError(f"expected {expected}, got {raw!r}", **where) from None


def _axis(values, rng, step, name, where_of):
    if values and rng:
        raise ConstraintError(f"give either {name}_values or {name}_range, not both", **where_of(f"{name}_range"))
    if values:
        return tuple(values)
    if rng is None:
        if step is not None:
            raise ConstraintError(f"{name}_step needs {name}_range", **where_of(f"{name}_step"))
        return ()
    if len(rng) != 2 or rng[1] < rng[0]:
        raise ConstraintError(f"{name}_range must be 'start, stop' with start <= stop", **where_of(f"{name}_range"))
    if step is None or not step > 0:
        raise ConstraintError(f"{name}_range needs a positive {name}_step", **where_of(f"{name}_step"))
    n = int(math.floor((rng[1] - rng[0]) / step + 1e-9)) + 1
    return tuple(round(rng[0] + k * step, 12) for k in range(n))


def parse_config(text: str) -> RunConfig:
    index = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.section, exc.option, exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", exc.section, None, exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message.splitlines()[0]}") from None

    def where(section, key=None):
        return {"section": section, "key": key, "line": index.get((section, key))}

    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise UnknownKeyError(f"unknown section {section!r}", **where(section))
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise UnknownKeyError(f"unknown key {key!r}", **where(section, key))
            kind = SCHEMA[section][key]
            w = where(section, key)
            if kind == "choice":
                v = raw.strip().lower()
                if v not in CHOICES[(section, key)]:
                    allowed = ", ".join(CHOICES[(section, key)])
                    raise ConfigTypeError(f"expected one of {allowed}, got {raw!r}", **w)
            else:
                v = _convert(kind, raw, w)
            values[(section, key)] = v

    def get(section, key, default=None):
        return values.get((section, key), default)

    def constraint(ok, message, section, key):
        if not ok:
            raise ConstraintError(message, **where(section, key))

    cfg = RunConfig()
    cfg.model = get("model", "name", "timoshenko")

    # params
    p = {k: v for (s, k), v in values.items() if s == "params"}
    chi = p.pop("chi", None)
    for k, v in p.items():
        if k == "gamma":
            constraint(abs(v) <= GAMMA_LIMIT, f"gamma out of range: need |gamma| <= {GAMMA_LIMIT}", "params", k)
        else:
            constraint(v > 0, f"{k} must be positive", "params", k)
    if chi is not None and "b" in p:
        raise ConstraintError("give either b or chi, not both", **where("params", "chi"))
    base = SystemParams(**p)
    cfg.params = base
    cfg.chi = chi

    # sweep
    cfg.gamma_values = _axis(
        get("sweep", "gamma_values"), get("sweep", "gamma_range"), get("sweep", "gamma_step"), "gamma",
        lambda k: where("sweep", k),
    )
    cfg.chi_values = _axis(
        get("sweep", "chi_values"), get("sweep", "chi_range"), get("sweep", "chi_step"), "chi",
        lambda k: where("sweep", k),
    )
    gkey = ("sweep", "gamma_values" if get("sweep", "gamma_values") else "gamma_range")
    for g in cfg.gamma_values:
        constraint(abs(g) <= GAMMA_LIMIT, f"gamma {g!r} out of range: need |gamma| <= {GAMMA_LIMIT}", *gkey)
    limit = base.a / base.rho1
    if cfg.chi_values:
        ckey = ("sweep", "chi_values" if get("sweep", "chi_values") else "chi_range")
        for x in cfg.chi_values:
            constraint(
                x < limit,
                f"b would be non-positive for chi = {x!r} (need chi < a/rho1 = {limit!r})",
                *ckey,
            )
    if chi is not None:
        constraint(
            chi < limit,
            f"b would be non-positive for chi = {chi!r} (need chi < a/rho1 = {limit!r})",
            "params",
            "chi",
        )
        cfg.params = point_params(base, base.gamma, chi)

    # spectrum
    kind = get("spectrum", "kind", "loggrid" if ("spectrum", None) not in index else None)
    if kind is None:
        raise ConstraintError("missing key 'kind'", **where("spectrum"))
    for (s, k) in values:
        if s == "spectrum" and k != "kind" and k not in SPECTRUM_KEYS[kind]:
            raise UnknownKeyError(f"key {k!r} does not apply to spectrum kind {kind!r}", **where(s, k))
    try:
        if kind == "dirichlet":
            cfg.spectrum = Dirichlet(get("spectrum", "ell", math.pi), get("spectrum", "n_max", 200))
        elif kind == "loggrid":
            cfg.spectrum = LogGrid(
                get("spectrum", "alpha_min", 1.0), get("spectrum", "alpha_max", 1e8), get("spectrum", "count", 400)
            )
        elif kind == "geometric":
            cfg.spectrum = Geometric(
                get("spectrum", "alpha0", 1.0), get("spectrum", "ratio", 2.0), get("spectrum", "count", 20)
            )
        else:
            if get("spectrum", "values") is None:
                raise ValueError("list spectrum needs 'values'")
            cfg.spectrum = ExplicitList(get("spectrum", "values"))
    except ValueError as exc:
        raise ConstraintError(str(exc), **where("spectrum")) from None

    # scan
    opt_keys = {f for f in ClassifyOptions.__dataclass_fields__}
    opts = {k: v for (s, k), v in values.items() if s == "scan" and k in opt_keys}
    for k, v in opts.items():
        if k in ("n_lambda",):
            constraint(v >= 2, f"{k} must be at least 2", "scan", k)
        elif k in ("lambda_min", "margin_threshold", "abscissa_threshold", "decay_threshold", "fit_decades"):
            constraint(v > 0, f"{k} must be positive", "scan", k)
    cfg.t_max = get("scan", "t_max", cfg.t_max)
    cfg.n_times = get("scan", "n_times", cfg.n_times)
    constraint(cfg.t_max > 0, "t_max must be positive", "scan", "t_max")
    constraint(cfg.n_times >= 2, "n_times must be at least 2", "scan", "n_times")
    opts.setdefault("decay_t_max", cfg.t_max)
    opts.setdefault("decay_n_times", cfg.n_times)
    cfg.options = ClassifyOptions(**opts)
    cfg.alpha = get("scan", "alpha", cfg.alpha)
    constraint(cfg.alpha > 0, "alpha must be positive", "scan", "alpha")
    init = get("scan", "initial")
    if init is not None:
        dim = 5 if cfg.model == "timoshenko" else 3
        constraint(len(init) == dim, f"initial needs {dim} components for model {cfg.model}", "scan", "initial")
        constraint(any(v != 0 for v in init), "initial state must be non-zero", "scan", "initial")
        cfg.initial = init

    # output
    cfg.out_dir = get("output", "dir", cfg.out_dir)
    cfg.workers = get("output", "workers", cfg.workers)
    constraint(cfg.workers >= 1, "workers must be at least 1", "output", "workers")
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config(text)
