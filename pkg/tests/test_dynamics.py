import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabilyze import dynamics as dyn
from stabilyze.linalg import NumericalFailure
from stabilyze.modal import ExplicitList, LogGrid, ModalState, SystemParams, energy, timoshenko_block, waveheat_block
from stabilyze.spectral import spectral_abscissa

from . import oracles

coef = st.floats(0.3, 3.0)
states = st.lists(st.floats(-1, 1), min_size=5, max_size=5).filter(lambda v: any(abs(x) > 1e-3 for x in v))


@st.composite
def params(draw, gamma=st.floats(0.0, 1.5)):
    return SystemParams(*(draw(coef) for _ in range(7)), gamma=draw(gamma))


def unit_state(block, u):
    u = np.asarray(u, dtype=float)
    return block.from_energy(u / np.linalg.norm(u) * math.sqrt(2))


# evolution


def test_zero_time_is_identity():
    b = timoshenko_block(SystemParams(), 3.0)
    z0 = np.arange(1.0, 6.0)
    np.testing.assert_allclose(dyn.evolve(b, ModalState(3.0, z0), 0.0).components, z0, rtol=0, atol=0)


@given(params(), st.floats(1e-2, 1e4), states, st.floats(0, 5), st.floats(0, 5))
def test_semigroup_law(p, alpha, u, s, t):
    b = timoshenko_block(p, alpha)
    z0 = unit_state(b, u)
    a = dyn.evolve(b, dyn.evolve(b, z0, s), t).components
    c = dyn.evolve(b, z0, s + t).components
    assert np.linalg.norm(b.T @ (a - c)) <= 1e-9 * np.linalg.norm(b.T @ z0)


@given(params(), st.floats(1e-2, 1e6), states, st.floats(0, 20))
def test_contraction(p, alpha, u, t):
    b = timoshenko_block(p, alpha)
    z0 = unit_state(b, u)
    e0 = dyn.block_energy(b, z0)
    assert dyn.block_energy(b, dyn.evolve(b, z0, t).components) <= e0 * (1 + 1e-9)


def test_decoupled_energy_is_conserved():
    p = SystemParams(delta=1e-300)
    b = timoshenko_block(p, 7.0)
    z0 = np.array([0.3, -1.0, 0.2, 0.5, 0.0])
    Z = dyn.trajectory(b, z0, np.linspace(0, 30, 61))
    E = np.array([energy(p, 7.0, z) for z in Z])
    np.testing.assert_allclose(E, E[0], rtol=1e-9)
    assert dyn.energy_identity_residual(b, z0, np.linspace(0, 30, 61)) <= 1e-11


def test_waveheat_trajectory_decays():
    b = waveheat_block(0.5, 4.0)
    z0 = b.from_energy([1.0, 0.0, 0.0])
    E = [dyn.block_energy(b, z) for z in dyn.trajectory(b, z0, np.linspace(0, 10, 11))]
    assert np.all(np.diff(E) <= 0) and E[-1] < 1e-2 * E[0]


# energy identity


@given(params(), st.floats(1e-2, 1e6), states)
def test_energy_identity(p, alpha, u):
    b = timoshenko_block(p, alpha)
    z0 = unit_state(b, u)
    assert dyn.energy_identity_residual(b, z0, np.linspace(0, 10, 21)) <= 1e-9
    assert dyn.energy_identity_residual(b, 2 * z0, np.linspace(0, 10, 21)) <= 1e-9


@given(params(), st.floats(1e-2, 1e4), states)
def test_energy_rate_is_quadratic(p, alpha, u):
    b = timoshenko_block(p, alpha)
    z = unit_state(b, u)
    assert dyn.energy_rate(b, 2 * z) == pytest.approx(4 * dyn.energy_rate(b, z), rel=1e-12, abs=1e-12)


def test_energy_rate_matches_gram_form():
    p = SystemParams(gamma=0.7, a=2.0, rho3=0.5)
    alpha = 12.0
    z = np.array([0.2, -0.4, 1.0, 0.3, -0.7])
    G = oracles.energy_gram(p, alpha)
    L = oracles.generator(p, alpha)
    assert dyn.energy_rate(timoshenko_block(p, alpha), z) == pytest.approx(z @ G @ (L @ z), rel=1e-12)


def test_rate_richardson():
    """Central differences of E converge to the exact rate at second order."""
    b = timoshenko_block(SystemParams(gamma=0.6), 5.0)
    z0 = b.from_energy([1.0, 0.5, -0.3, 0.2, 0.8])
    t0 = 1.3
    exact = dyn.energy_rate(b, dyn.evolve(b, z0, t0).components)

    def central(h):
        ep = dyn.block_energy(b, dyn.evolve(b, z0, t0 + h).components)
        em = dyn.block_energy(b, dyn.evolve(b, z0, t0 - h).components)
        return (ep - em) / (2 * h)

    e1, e2 = abs(central(1e-2) - exact), abs(central(5e-3) - exact)
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_mode_horizon():
    b = timoshenko_block(SystemParams(), 1.0)
    rate = -spectral_abscissa(b)
    assert dyn.mode_horizon(b, 1e9) == pytest.approx(dyn.UNDERFLOW_EXPONENT / (2 * rate))
    assert dyn.mode_horizon(b, 5.0) == 5.0


# Lyapunov machinery

_CONSTS = dyn.lyapunov_constants(SystemParams(), 1.0)


@pytest.fixture(scope="module")
def unit_consts():
    return _CONSTS


def test_constants_formulae(unit_consts):
    k = unit_consts
    p = SystemParams()
    assert k.M_const == 1 + max(4 * k.C2 / (p.a * p.c), 4 * k.C1 * k.C2 / (p.a * p.b * p.c))
    assert k.nu == 2 * math.sqrt(k.eps) * k.C2 / p.c
    assert 1e-8 <= k.eps <= 1 and math.log2(k.eps) == int(math.log2(k.eps))


@given(params(gamma=st.just(0.5)).map(lambda p: p.replace(b=p.rho2 * p.a / p.rho1)), st.floats(0.1, 10), st.floats(1.01, 100))
def test_constants_monotone_in_alpha0(p, alpha0, shrink):
    hi = dyn.lemma_constants(p, alpha0)
    lo = dyn.lemma_constants(p, alpha0 / shrink)
    assert all(l >= h for l, h in zip(lo, hi))


def test_constants_need_equal_speed_and_half():
    with pytest.raises(ValueError, match="chi"):
        dyn.lyapunov_constants(SystemParams(a=2.0), 1.0)
    with pytest.raises(ValueError, match="gamma"):
        dyn.lyapunov_constants(SystemParams(gamma=0.7), 1.0)


def test_constants_validate_forms(unit_consts):
    p = SystemParams()
    for alpha in (1.0, 37.0, 1e4, 1e8):
        forms = dyn.inequality_forms(p, alpha, unit_consts)
        T = timoshenko_block(p, alpha).T
        Ti = np.linalg.inv(T)
        for name in ("lemma1", "lemma2", "lemma3", "combined"):
            assert np.linalg.eigvalsh(Ti.T @ forms[name] @ Ti).max() <= 1e-9
        lam = np.linalg.eigvalsh(2 * Ti.T @ forms["Lambda"] @ Ti)
        assert lam.min() >= 0.5 - 1e-9 and lam.max() <= 2 + 1e-9


def test_zero_state(unit_consts):
    r = dyn.lyapunov_residuals(SystemParams(), 4.0, np.zeros(5), np.linspace(0, 1, 5), unit_consts)
    assert r == dyn.LyapunovResiduals(0, 0, 0, 0, 0, 0)
    probe = dyn.probe_trajectory(SystemParams(), 4.0, np.zeros(5), [0.0, 1.0], unit_consts)
    assert all(np.all(v == 0) for v in probe.functionals.values())


def test_functional_derivatives_are_exact():
    p = SystemParams(gamma=0.5)
    probe = dyn.probe_trajectory(p, 9.0, np.array([0.1, 0.2, -0.3, 0.4, 0.5]), np.linspace(0, 1, 2001))
    dt = probe.times[1]
    for name in ("L1", "L2", "L3", "E"):
        fd = np.gradient(probe.functionals[name], dt)
        np.testing.assert_allclose(fd[5:-5], probe.derivatives[name][5:-5], atol=1e-4 * np.abs(fd).max())


@settings(max_examples=30)
@given(st.floats(0, 8), states)
def test_residuals_vanish_on_trajectories(log_alpha, u):
    p = SystemParams()
    consts = _CONSTS
    alpha = 10**log_alpha
    b = timoshenko_block(p, alpha)
    z0 = unit_state(b, u)
    r = dyn.lyapunov_residuals(p, b, z0, np.linspace(0, 50, 101), consts)
    assert r.worst() <= 1e-8 * dyn.block_energy(b, z0)
    assert r.equivalence <= 1e-9 and r.gronwall <= 0


def test_first_two_lemmas_hold_for_unequal_speeds():
    p = SystemParams(a=2.0)
    C1, C2, C3 = dyn.lemma_constants(p, 1.0)
    consts = dyn.combined_constants(p, C1, C2, C3, 1e-3)
    rng = np.random.default_rng(5)
    for alpha in (1.0, 1e3, 1e6):
        b = timoshenko_block(p, alpha)
        for _ in range(5):
            z0 = unit_state(b, rng.standard_normal(5))
            r = dyn.lyapunov_residuals(p, b, z0, np.linspace(0, 20, 41), consts)
            assert r.lemma1 <= 1e-8 and r.lemma2 <= 1e-8



# decay rates


@pytest.mark.parametrize("alpha", [1.0, 10.0, 300.0])
def test_single_mode_rate_is_twice_abscissa(alpha):
    fit = dyn.decay_rate_fit(SystemParams(), ExplicitList([alpha]), None, np.linspace(0, 1e3, 1001))
    rate = -2 * spectral_abscissa(timoshenko_block(SystemParams(), alpha))
    assert fit.kappa == pytest.approx(rate, rel=0.05)
    assert fit.K >= 1


def test_rate_dominates_gronwall_bound():
    fit = dyn.decay_rate_fit(SystemParams(), LogGrid(1, 1e4, 9), None, np.linspace(0, 1e3, 1001))
    assert fit.kappa >= _CONSTS.eps**2 / 2


def test_no_uniform_rate_at_gamma_one():
    fit = dyn.decay_rate_fit(SystemParams(gamma=1.0), LogGrid(1e2, 1e6, 3), None, np.linspace(0, 1e3, 1001))
    kappas = [k for _, k in fit.per_mode]
    assert kappas[0] > 50 * kappas[1] > 2500 * kappas[2] > 0
    assert fit.kappa == kappas[-1]


def test_energy_increase_is_reported(monkeypatch):
    b = timoshenko_block(SystemParams(), 1.0)
    monkeypatch.setattr(dyn, "block_energy", lambda blk, z: float(np.exp(np.abs(z).sum())))
    with pytest.raises(NumericalFailure, match="energy increased"):
        dyn.mode_decay_rate(b, [b.from_energy([1, 1, 1, 1, 1.0])], np.linspace(0, 10, 11))
