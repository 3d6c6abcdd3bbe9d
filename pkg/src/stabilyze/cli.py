"""Command-line driver: ``stabilyze <command> --config FILE``.

Every output is a CSV with a fixed header, ``.12g`` numbers and ``\\n``
line endings, so two runs of the same config are byte-identical.
Exit status: 0 when every row was computed, 1 on a configuration error,
2 when a numerical failure left rows uncomputed.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, spectral
from .config import ConfigError, RunConfig, load_config
from .linalg import NumericalFailure
from .modal import TIMOSHENKO, make_block

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

REPORT_COLUMNS = (
    "gamma",
    "chi",
    "sup_abscissa",
    "pruss_margin",
    "inverse_growth_exponent",
    "witness_exponent",
    "classification",
    "analytic_prediction",
    "agree",
    "status",
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if v == 0:
            return "0"  # no negative zero
        return format(v, ".12g")
    return str(value)


def key_tag(gamma, chi) -> str:
    return f"{fmt(gamma)}_{fmt(chi)}"


def write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in _seq(row, columns)])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def _seq(row, columns):
    return [row.get(c) for c in columns] if isinstance(row, dict) else list(row)


def _status(exc: Exception) -> str:
    return f"error:{type(exc).__name__}"


# ---------------------------------------------------------------------------
# per-point tasks (module level so they pickle for the worker pool)


def task_classify(cfg: RunConfig, gamma, chi, params) -> dict:
    row = {"gamma": gamma, "chi": chi}
    try:
        rep = spectral.classify(params, cfg.spectrum, cfg.options, cfg.model)
    except (NumericalFailure, ValueError) as exc:
        row["status"] = _status(exc)
        return row
    row.update(
        sup_abscissa=rep.sup_abscissa,
        pruss_margin=rep.pruss_margin,
        inverse_growth_exponent=rep.inverse_growth_exponent,
        witness_exponent=rep.witness_exponent_fit,
        classification=rep.classification,
        analytic_prediction=rep.analytic_prediction,
        agree=rep.agree,
        status="ok",
    )
    return row


WITNESS_COLUMNS = ("kind", "alpha", "lambda", "watched_magnitude", "fitted_exponent", "predicted_exponent")


def task_witness(cfg: RunConfig, gamma, chi, params):
    ws = spectral.witness_scan(params, cfg.spectrum, cfg.options.fit_decades)
    rows = [("mode", a, lam, m, None, None) for a, lam, m in ws.per_alpha]
    rows.append((f"summary:{ws.case.case_id}", None, None, None, ws.fitted_exponent, ws.case.predicted_exponent))
    return rows


DECAY_COLUMNS = ("t", "h")
DECAY_MODE_COLUMNS = ("alpha", "kappa_fit")


def task_decay(cfg: RunConfig, gamma, chi, params):
    times = spectral.default_decay_times(cfg.t_max, cfg.n_times)
    curve = spectral.semiuniform_decay(params, cfg.spectrum, times, cfg.model, cfg.options.decay_threshold)
    grid = np.linspace(0.0, cfg.t_max, max(cfg.n_times, 64))
    fit = dynamics.decay_rate_fit(params, cfg.spectrum, None, grid, cfg.model)
    return list(zip(curve.times, curve.h)), fit.per_mode


SCAN_COLUMNS = ("alpha", "lambda_argmin", "sigma_min")


def task_scan(cfg: RunConfig, gamma, chi, params):
    o = cfg.options
    grid = spectral.default_lambda_grid(params, cfg.spectrum, cfg.model, o.n_lambda, o.lambda_min)
    scan = spectral.pruss_margin(params, cfg.spectrum, grid, cfg.model)
    return list(zip(scan.alphas, scan.per_alpha_argmin, scan.per_alpha))


SIM_COLUMNS = ("t", "energy", "energy_rate", "dissipation", "L1", "L2", "L3", "Lambda", "dLambda")


def task_simulate(cfg: RunConfig, gamma, chi, params):
    block = make_block(params, cfg.alpha, cfg.model)
    u0 = np.asarray(cfg.initial if cfg.initial is not None else np.ones(block.dim), dtype=float)
    z0 = np.linalg.solve(block.T, u0)
    times = np.linspace(0.0, cfg.t_max, cfg.n_times)
    Z = dynamics.trajectory(block, z0, times)
    E = [dynamics.block_energy(block, z) for z in Z]
    dE = [dynamics.energy_rate(block, z) for z in Z]
    D = [dynamics.thermal_dissipation(block, z) for z in Z]
    blank = [None] * len(times)
    cols = {"L1": blank, "L2": blank, "L3": blank, "Lambda": blank, "dLambda": blank}
    if cfg.model == TIMOSHENKO:
        consts = None
        try:
            consts = dynamics.lyapunov_constants(params, cfg.spectrum.lowest)
        except (ValueError, NumericalFailure):
            pass
        probe = dynamics.probe_trajectory(params, cfg.alpha, z0, times, consts)
        for name in ("L1", "L2", "L3"):
            cols[name] = probe.functionals[name]
        if consts is not None:
            cols["Lambda"] = probe.functionals["Lambda"]
            cols["dLambda"] = probe.derivatives["Lambda"]
    return [
        (t, E[k], dE[k], D[k], cols["L1"][k], cols["L2"][k], cols["L3"][k], cols["Lambda"][k], cols["dLambda"][k])
        for k, t in enumerate(times)
    ]


# ---------------------------------------------------------------------------
# orchestration


def _run_points(fn, cfg: RunConfig, points):
    args = [(cfg, g, x, p) for g, x, p in points]
    if cfg.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_call, [(fn, a) for a in args]))
    return [_call((fn, a)) for a in args]


def _call(job):
    fn, args = job
    try:
        return fn(*args), None
    except (NumericalFailure, ValueError) as exc:
        return None, exc


def _read_report(path: Path) -> dict:
    if not path.exists():
        return {}
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {(float(r["gamma"]), float(r["chi"])): r for r in rows if r.get("status") == "ok"}


def cmd_report(cfg: RunConfig, out: Path, resume: bool, log) -> int:
    path = out / "report.csv"
    done = _read_report(path) if resume else {}
    points = [pt for pt in cfg.points() if (pt[0], pt[1]) not in done]
    results = _run_points(task_classify, cfg, points)
    rows = dict(done)
    failed = 0
    for (g, x, _), (row, exc) in zip(points, results):
        if row is None:
            row = {"gamma": g, "chi": x, "status": _status(exc)}
        if row.get("status") != "ok":
            failed += 1
            log(f"gamma={fmt(g)} chi={fmt(x)}: {row['status']}")
        rows[(g, x)] = row
    ordered = [rows[k] for k in sorted(rows)]
    write_csv(path, REPORT_COLUMNS, ordered)
    for r in ordered:
        if r.get("status") == "ok":
            log(f"gamma={r['gamma']} chi={r['chi']}: {r['classification']} (agree={r['agree']})")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_per_point(cfg: RunConfig, out: Path, resume: bool, log, task, writers) -> int:
    points = cfg.points()
    if resume:
        points = [pt for pt in points if not all((out / w[0].format(tag=key_tag(pt[0], pt[1]))).exists() for w in writers)]
    results = _run_points(task, cfg, points)
    failed = 0
    for (g, x, _), (res, exc) in zip(points, results):
        if isinstance(exc, spectral.WitnessCaseError):
            log(f"gamma={fmt(g)} chi={fmt(x)}: skipped, {exc}")
            continue
        if res is None:
            failed += 1
            log(f"gamma={fmt(g)} chi={fmt(x)}: {_status(exc)}: {exc}")
            continue
        parts = res if len(writers) > 1 else (res,)
        for (pattern, columns), rows in zip(writers, parts):
            path = out / pattern.format(tag=key_tag(g, x))
            write_csv(path, columns, rows)
            log(f"wrote {path}")
    return EXIT_NUMERIC if failed else EXIT_OK


COMMANDS = ("classify", "sweep", "witness", "simulate", "decay", "resolvent-scan")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabilyze", description="Modal stability analysis of thermoelastic beams.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI-style run configuration")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--workers", type=int, help="worker processes (overrides [output] workers)")
    ap.add_argument("--resume", action="store_true", help="skip points whose output already exists")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = lambda msg: print(msg, file=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be at least 1")
            cfg.workers = args.workers
        if args.command == "sweep" and not cfg.has_sweep:
            raise ConfigError("sweep needs a [sweep] section with gamma or chi values")
    except ConfigError as exc:
        log(f"config error: {exc}")
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg.out_dir)
    cmd = args.command
    try:
        if cmd in ("classify", "sweep"):
            return cmd_report(cfg, out, args.resume, log)
        if cmd == "witness":
            if cfg.model != TIMOSHENKO:
                log("config error: witness sequences are defined for the timoshenko model only")
                return EXIT_CONFIG
            return cmd_per_point(cfg, out, args.resume, log, task_witness, [("witness_{tag}.csv", WITNESS_COLUMNS)])
        if cmd == "decay":
            writers = [("decay_{tag}.csv", DECAY_COLUMNS), ("decay_modes_{tag}.csv", DECAY_MODE_COLUMNS)]
            return cmd_per_point(cfg, out, args.resume, log, task_decay, writers)
        if cmd == "resolvent-scan":
            return cmd_per_point(cfg, out, args.resume, log, task_scan, [("scan_{tag}.csv", SCAN_COLUMNS)])
        return cmd_per_point(cfg, out, args.resume, log, task_simulate, [("simulate_{tag}.csv", SIM_COLUMNS)])
    except NumericalFailure as exc:
        log(f"numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
