import math

import pytest

from stabilyze.config import (
    ConfigError,
    ConfigTypeError,
    ConstraintError,
    UnknownKeyError,
    load_config,
    parse_config,
)
from stabilyze.modal import Dirichlet, Geometric, LogGrid

MINIMAL = """\
[model]
name = timoshenko

[params]
rho1 = 1
rho2 = 1
rho3 = 1
a = 1
b = 1
c = 1
delta = 1
gamma = 0.5

[spectrum]
kind = dirichlet
ell = 3.141592653589793
n_max = 200
"""


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.model == "timoshenko"
    assert cfg.params.gamma == 0.5 and cfg.params.chi == 0
    assert cfg.spectrum == Dirichlet(math.pi, 200)
    assert [(g, x) for g, x, _ in cfg.points()] == [(0.5, 0.0)]


def test_empty_config_uses_defaults():
    cfg = parse_config("")
    assert cfg.spectrum == LogGrid(1.0, 1e8, 400) and cfg.workers == 1


def test_chi_out_of_range_names_key_and_line():
    with pytest.raises(ConstraintError, match="b would be non-positive") as info:
        parse_config("[params]\na = 1\nrho1 = 1\nchi = 5\n")
    assert info.value.line == 4 and info.value.key == "chi"
    assert "line 4" in str(info.value)


def test_gamma_out_of_range():
    with pytest.raises(ConstraintError, match="out of range") as info:
        parse_config("[params]\ngamma = 10\n")
    assert info.value.key == "gamma" and info.value.line == 2


def test_unknown_key_and_section():
    with pytest.raises(UnknownKeyError, match="'speed'") as info:
        parse_config("[params]\n\nspeed = 3\n")
    assert info.value.line == 3
    with pytest.raises(UnknownKeyError, match="section"):
        parse_config("[extras]\nx = 1\n")
    with pytest.raises(UnknownKeyError, match="does not apply"):
        parse_config("[spectrum]\nkind = dirichlet\nalpha_max = 5\n")


def test_type_mismatch():
    with pytest.raises(ConfigTypeError, match="expected a number") as info:
        parse_config("[params]\nrho2 = heavy\n")
    assert info.value.line == 2
    with pytest.raises(ConfigTypeError, match="integer"):
        parse_config("[spectrum]\nkind = dirichlet\nn_max = 2.5\n")
    with pytest.raises(ConfigTypeError, match="one of"):
        parse_config("[model]\nname = plate\n")


def test_error_classes_are_distinct():
    kinds = {UnknownKeyError, ConfigTypeError, ConstraintError}
    assert len(kinds) == 3 and all(issubclass(k, ConfigError) for k in kinds)


def test_sweep_axes():
    cfg = parse_config(
        "[sweep]\ngamma_range = 0, 1.25\ngamma_step = 0.25\nchi_values = 0.5, 0\n"
        "[spectrum]\nkind = geometric\nalpha0 = 2\ncount = 5\n"
    )
    assert cfg.gamma_values == (0.0, 0.25, 0.5, 0.75, 1.0, 1.25)
    pts = cfg.points()
    assert len(pts) == 12 and pts[0][:2] == (0.0, 0.0) and pts[1][:2] == (0.0, 0.5)
    assert pts[1][2].b == pytest.approx(0.5)
    assert cfg.spectrum == Geometric(2.0, 2.0, 5)


@pytest.mark.parametrize(
    "text,match",
    [
        ("[sweep]\nchi_values = 0, 2\n", "b would be non-positive"),
        ("[sweep]\ngamma_values = 0, 5\n", "out of range"),
        ("[sweep]\ngamma_range = 0, 1\n", "positive gamma_step"),
        ("[sweep]\ngamma_range = 1, 0\ngamma_step = 0.5\n", "start <= stop"),
        ("[params]\nb = 1\nchi = 0.2\n", "either b or chi"),
        ("[params]\ndelta = 0\n", "positive"),
        ("[output]\nworkers = 0\n", "workers"),
        ("[scan]\ninitial = 1, 2\n", "5 components"),
        ("[spectrum]\nkind = loggrid\nalpha_min = 10\nalpha_max = 1\n", "alpha_max"),
    ],
)
def test_constraints(text, match):
    with pytest.raises(ConstraintError, match=match):
        parse_config(text)


def test_chi_sets_b():
    cfg = parse_config("[params]\na = 2\nrho2 = 3\nchi = 1\n")
    assert cfg.params.b == pytest.approx(3.0) and cfg.params.chi == pytest.approx(1.0)


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("[params]\na = 1\na = 2\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")
