"""Modal trajectories, the energy identity and the Lyapunov functionals.

Trajectories are exact: ``z(t) = T^-1 exp(t M) T z0``.  Time derivatives
of every functional are evaluated from ``z' = L z`` rather than by
differencing, so a residual measures the inequality and nothing else.

The three auxiliary functionals are quadratic forms ``z^T P z`` with
symmetric ``P``; an inequality ``F(z, z') <= 0`` with ``z' = L z`` is a
quadratic form too, so it can be checked on sample states *and* for all
states at once through the largest eigenvalue of the form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .modal import (
    LogGrid,
    ModalBlock,
    ModalState,
    SpectrumSpec,
    SystemParams,
    is_equal_speed,
    make_block,
    timoshenko_block,
)
from .spectral import spectral_abscissa

UNDERFLOW_EXPONENT = 300.0


def _components(state):
    return np.asarray(state.components if isinstance(state, ModalState) else state)


def evolve(block: ModalBlock, state0, t: float) -> ModalState:
    """State after time ``t``, propagated in energy coordinates."""
    z0 = _components(state0)
    if t == 0:
        return ModalState(block.alpha, np.array(z0, copy=True))
    u = linalg.expm(block.M, t) @ (block.T @ z0)
    return ModalState(block.alpha, np.linalg.solve(block.T, u))


def trajectory(block: ModalBlock, state0, times) -> np.ndarray:
    """States at every time in ``times``; shape ``(len(times), dim)``."""
    z0 = _components(state0)
    u0 = block.T @ z0
    times = np.asarray(times, dtype=float)
    E = linalg.expm(times[:, None, None] * block.M, 1.0) if times.size else np.empty((0,) + block.M.shape)
    U = E @ u0
    return np.linalg.solve(block.T, U.T).T


def mode_horizon(block: ModalBlock, t_max: float) -> float:
    """Longest useful simulation time for one mode.

    Stops once the slowest mode has decayed by ``exp(-300)``, so energies
    stay well above the underflow threshold.
    """
    rate = -spectral_abscissa(block)
    if rate <= 0:
        return float(t_max)
    return float(min(t_max, UNDERFLOW_EXPONENT / (2 * rate)))


def block_energy(block: ModalBlock, z) -> float:
    u = block.T @ np.asarray(z)
    return 0.5 * float(np.vdot(u, u).real)


def energy_rate(block: ModalBlock, z) -> float:
    """``dE/dt`` at state ``z`` from ``z' = L z`` (energy inner product of z and z')."""
    z = np.asarray(z)
    return float(np.vdot(block.T @ z, block.T @ (block.L @ z)).real)


def thermal_dissipation(block: ModalBlock, z) -> float:
    """``c |theta|_1^2`` of the state, i.e. ``c alpha theta^2`` at this mode."""
    th = block.T[-1, -1] * np.asarray(z)[-1]
    return block.dissipation * float(abs(th) ** 2)


def energy_identity_residual(block: ModalBlock, state0, t_grid) -> float:
    """``max |dE/dt + c alpha theta^2| / (1 + E(0))`` along the trajectory."""
    Z = trajectory(block, state0, t_grid)
    e0 = block_energy(block, _components(state0))
    worst = 0.0
    for z in Z:
        worst = max(worst, abs(energy_rate(block, z) + thermal_dissipation(block, z)))
    return worst / (1.0 + e0)


# ---------------------------------------------------------------------------
# Lyapunov functionals (Timoshenko, equal wave speeds, gamma = 1/2)


def functional_forms(params: SystemParams, alpha: float) -> dict:
    """Symmetric matrices of the three auxiliary functionals at one mode."""
    p = params
    sa = math.sqrt(alpha)
    P1 = np.zeros((5, 5))
    P1[2, 3] = P1[3, 2] = p.rho2
    P1[0, 1] = P1[1, 0] = -p.rho1
    P2 = np.zeros((5, 5))
    P2[3, 4] = P2[4, 3] = p.rho2 * p.rho3 / (p.delta * sa)
    P3 = np.zeros((5, 5))
    P3[3, 0] = P3[0, 3] = p.rho2 * sa
    P3[3, 2] = P3[2, 3] = p.rho2
    P3[2, 1] = P3[1, 2] = -p.rho2 * sa
    return {"L1": P1, "L2": P2, "L3": P3}


def _sym(A):
    return 0.5 * (A + A.T)


def _rate_form(P, L):
    """Form of ``d/dt z^T P z`` along ``z' = L z``."""
    return _sym(P @ L + L.T @ P)


def _square_forms(params, alpha):
    """Forms for the norms appearing in the lemmas."""
    sa = math.sqrt(alpha)
    x = np.array([sa, 0, 1, 0, 0.0])  # A^1/2 phi + psi
    unit = np.eye(5)
    return {
        "X2": np.outer(x, x),
        "phit2": np.outer(unit[1], unit[1]),
        "psi1": alpha * np.outer(unit[2], unit[2]),
        "psit2": np.outer(unit[3], unit[3]),
        "theta1": alpha * np.outer(unit[4], unit[4]),
    }


@dataclass(frozen=True)
class LyapunovConstants:
    C1: float
    C2: float
    C3: float
    eps: float
    M_const: float
    nu: float


def lemma_constants(params: SystemParams, alpha0: float) -> tuple:
    """Concrete ``(C1, C2, C3)`` from Young's inequality and ``alpha >= alpha0``.

    C2 is valid for ``nu <= 1``.
    """
    p = params
    C1 = max(2 * p.rho2, 2 * p.a + 8 * p.a**2 / (p.b * alpha0), 2 * p.delta**2 / (p.b * alpha0))
    C2 = (
        2 * p.rho3 / alpha0
        + p.c**2 * p.rho2 / p.delta**2
        + p.rho3**2 / p.delta**2 * (p.b**2 / alpha0 + p.a**2 / alpha0**2)
    )
    C3 = max(2 * p.rho2, p.delta**2 / p.a)
    return C1, C2, C3


def combined_constants(params: SystemParams, C1, C2, C3, eps) -> LyapunovConstants:
    p = params
    M_const = 1 + max(4 * C2 / (p.a * p.c), 4 * C1 * C2 / (p.a * p.b * p.c))
    nu = 2 * math.sqrt(eps) * C2 / p.c
    return LyapunovConstants(C1, C2, C3, eps, M_const, nu)


def inequality_forms(params: SystemParams, alpha: float, consts: LyapunovConstants) -> dict:
    """Forms whose non-positivity is each inequality; ``E`` and ``Lambda`` included."""
    p = params
    k = consts
    L = timoshenko_block(params, alpha).L
    T = timoshenko_block(params, alpha).T
    P = functional_forms(params, alpha)
    S = _square_forms(params, alpha)
    Eform = 0.5 * T.T @ T
    D = {name: _rate_form(F, L) for name, F in P.items()}
    D["E"] = _rate_form(Eform, L)
    lemma1 = D["L1"] + p.rho1 * S["phit2"] + p.b * S["psi1"] - k.C1 * (S["psit2"] + S["X2"] + S["theta1"])
    lemma2 = D["L2"] + p.rho2 * S["psit2"] - k.nu * (S["psi1"] + S["X2"]) - k.C2 / k.nu * S["theta1"]
    lemma3 = D["L3"] + p.a * S["X2"] - k.C3 * (S["psit2"] + S["theta1"])
    w = k.eps * k.M_const
    se = math.sqrt(k.eps)
    Lam = Eform + w * (p.a / (2 * k.C1) * P["L1"] + P["L3"]) + se * P["L2"]
    dLam = D["E"] + w * (p.a / (2 * k.C1) * D["L1"] + D["L3"]) + se * D["L2"]
    return {
        "lemma1": lemma1,
        "lemma2": lemma2,
        "lemma3": lemma3,
        "combined": dLam + k.eps**2 * Eform,
        "Lambda": Lam,
        "E": Eform,
    }


def _energy_normalised_max_eig(Q, T):
    """Largest ``z^T Q z / E(z)``."""
    Tinv = np.linalg.inv(T)
    Qh = _sym(Tinv.T @ Q @ Tinv)
    return 2.0 * float(np.linalg.eigvalsh(Qh)[-1])


def _energy_normalised_min_eig(Q, T):
    Tinv = np.linalg.inv(T)
    Qh = _sym(Tinv.T @ Q @ Tinv)
    return 2.0 * float(np.linalg.eigvalsh(Qh)[0])


def _validate(params, consts, alphas, probes, tol) -> bool:
    if consts.nu > 1:
        return False
    for alpha, Z in zip(alphas, probes):
        T = timoshenko_block(params, alpha).T
        F = inequality_forms(params, alpha, consts)
        for name in ("lemma1", "lemma2", "lemma3", "combined"):
            if _energy_normalised_max_eig(F[name], T) > tol:
                return False
        lo = _energy_normalised_min_eig(F["Lambda"], T)
        hi = _energy_normalised_max_eig(F["Lambda"], T)
        if lo < 0.5 - tol or hi > 2.0 + tol:
            return False
        # sampled states, as an independent check on the eigenvalue test
        E = 0.5 * np.einsum("ki,ij,kj->k", Z, F["E"] * 2, Z)
        for name in ("lemma1", "lemma2", "lemma3", "combined"):
            vals = np.einsum("ki,ij,kj->k", Z, F[name], Z)
            if np.any(vals > tol * E):
                return False
        lam = np.einsum("ki,ij,kj->k", Z, F["Lambda"], Z)
        if np.any(lam < (0.5 - tol) * E) or np.any(lam > (2.0 + tol) * E):
            return False
    return True


def _probe_states(params, alphas, n_probes, seed):
    """Random states with unit energy, spread over the sampled modes."""
    rng = np.random.default_rng(seed)
    per = max(1, n_probes // len(alphas))
    out = []
    for alpha in alphas:
        T = timoshenko_block(params, alpha).T
        U = rng.standard_normal((per, 5))
        U /= np.linalg.norm(U, axis=1, keepdims=True) / math.sqrt(2.0)
        out.append(np.linalg.solve(T, U.T).T)
    return out


def lyapunov_constants(
    params: SystemParams,
    alpha0: float,
    alphas=None,
    n_probes: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
) -> LyapunovConstants:
    """Lemma constants and the largest validated ``eps`` in ``{2^-k}``.

    ``alphas`` are the modes used for validation (default: 40 log-spaced
    values from ``alpha0`` to ``1e8``).  Requires equal wave speeds and
    ``gamma = 1/2``: the third functional and the combined estimate use both.
    """
    if not is_equal_speed(params):
        raise ValueError("Lyapunov constants need chi = 0")
    if not math.isclose(params.gamma, 0.5, abs_tol=1e-12):
        raise ValueError("Lyapunov constants are derived for gamma = 1/2")
    if alphas is None:
        top = max(1e8, alpha0)
        alphas = LogGrid(alpha0, top, 40).values() if top > alpha0 else np.array([alpha0])
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < alpha0 * (1 - 1e-12)):
        raise ValueError("validation modes must lie above alpha0")
    C1, C2, C3 = lemma_constants(params, alpha0)
    probes = _probe_states(params, alphas, n_probes, seed)
    eps = 1.0
    while eps >= 1e-8:
        consts = combined_constants(params, C1, C2, C3, eps)
        if _validate(params, consts, alphas, probes, tol):
            return consts
        eps *= 0.5
    raise linalg.NumericalFailure("no eps in [1e-8, 1] validates the Lyapunov inequalities")


@dataclass
class TrajectoryProbe:
    block: ModalBlock = field(repr=False)
    initial: np.ndarray
    times: np.ndarray
    states: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)
    functionals: dict = field(repr=False)  # name -> values
    derivatives: dict = field(repr=False)  # name -> exact time derivatives


def probe_trajectory(params: SystemParams, alpha: float, z0, times, consts: Optional[LyapunovConstants] = None):
    block = timoshenko_block(params, alpha)
    times = np.asarray(times, dtype=float)
    Z = trajectory(block, z0, times)
    P = functional_forms(params, alpha)
    L = block.L
    vals = {name: np.einsum("ki,ij,kj->k", Z, F, Z) for name, F in P.items()}
    ders = {name: 2 * np.einsum("ki,ij,kj->k", Z, F, Z @ L.T) for name, F in P.items()}
    E = np.array([block_energy(block, z) for z in Z])
    dE = np.array([energy_rate(block, z) for z in Z])
    if consts is not None:
        w = consts.eps * consts.M_const
        se = math.sqrt(consts.eps)
        coef = {"L1": w * params.a / (2 * consts.C1), "L3": w, "L2": se}
        vals["Lambda"] = E + sum(coef[n] * vals[n] for n in coef)
        ders["Lambda"] = dE + sum(coef[n] * ders[n] for n in coef)
    vals["E"] = E
    ders["E"] = dE
    return TrajectoryProbe(block, np.asarray(z0), times, Z, E, vals, ders)


@dataclass(frozen=True)
class LyapunovResiduals:
    lemma1: float
    lemma2: float
    lemma3: float
    combined: float
    equivalence: float  # worst relative breach of E/2 <= Lambda <= 2E
    gronwall: float  # worst breach of E(t) <= 2 Lambda(0) exp(-eps^2 t / 2), relative to E(0)

    def worst(self) -> float:
        return max(self.lemma1, self.lemma2, self.lemma3, self.combined)


def lyapunov_residuals(params, block_or_alpha, state0, t_grid, consts: LyapunovConstants) -> LyapunovResiduals:
    """Largest positive violation of each inequality along a trajectory.

    Values are absolute; 0 means the inequality held at every grid time.
    The first two lemmas hold for any ``chi``; the third and the combined estimate
    only for ``chi = 0``.
    """
    p = params
    alpha = block_or_alpha.alpha if isinstance(block_or_alpha, ModalBlock) else float(block_or_alpha)
    z0 = _components(state0)
    probe = probe_trajectory(params, alpha, z0, t_grid, consts)
    Z = probe.states
    sa = math.sqrt(alpha)
    X2 = np.abs(sa * Z[:, 0] + Z[:, 2]) ** 2
    phit2 = np.abs(Z[:, 1]) ** 2
    psi1 = alpha * np.abs(Z[:, 2]) ** 2
    psit2 = np.abs(Z[:, 3]) ** 2
    th1 = alpha * np.abs(Z[:, 4]) ** 2
    d = probe.derivatives
    k = consts
    r1 = d["L1"] + p.rho1 * phit2 + p.b * psi1 - k.C1 * (psit2 + X2 + th1)
    r2 = d["L2"] + p.rho2 * psit2 - k.nu * (psi1 + X2) - k.C2 / k.nu * th1
    r3 = d["L3"] + p.a * X2 - k.C3 * (psit2 + th1)
    rc = d["Lambda"] + k.eps**2 * probe.energy
    E = probe.energy
    Lam = probe.functionals["Lambda"]
    equiv = np.maximum(0.5 * E - Lam, Lam - 2 * E)
    envelope = 2 * Lam[0] * np.exp(-(k.eps**2) * probe.times / 2)
    gron = (E - envelope) / max(E[0], np.finfo(float).tiny)
    pos = lambda v: float(max(0.0, np.max(v))) if len(v) else 0.0
    return LyapunovResiduals(pos(r1), pos(r2), pos(r3), pos(rc), pos(equiv), pos(gron))


# ---------------------------------------------------------------------------
# decay-rate fits


@dataclass
class DecayFit:
    kappa: float
    K: float
    per_mode: list  # (alpha, kappa_alpha)


def _fit_rate(times, E):
    keep = E > np.finfo(float).tiny * 1e10
    t, e = times[keep], E[keep]
    half = t >= t[-1] / 2 if t.size else keep
    t, e = t[half], e[half]
    if t.size < 2:
        raise linalg.NumericalFailure("not enough resolvable samples to fit a decay rate")
    slope, _ = np.polyfit(t, np.log(e), 1)
    return -float(slope)


def expm_budget(block: ModalBlock, t: float) -> float:
    """Relative accuracy to expect from ``exp(t M)``: about ``eps * t * |M|``."""
    return 100 * np.finfo(float).eps * max(1.0, t * linalg.operator_norm(block.M))


def mode_decay_rate(block: ModalBlock, states, t_grid, tol: float = 1e-6) -> float:
    """Slowest fitted energy decay rate of one mode over a family of initial states.

    An energy increase larger than ``tol`` (or the expm accuracy budget,
    if that is larger) is reported as a failure.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    horizon = mode_horizon(block, t_grid[-1])
    times = t_grid[t_grid <= horizon]
    if times.size < 4:
        times = np.linspace(0.0, horizon, 64)
    tol = max(tol, expm_budget(block, times[-1]))
    rates = []
    for z0 in states:
        Z = trajectory(block, z0, times)
        E = np.array([block_energy(block, z) for z in Z])
        if np.any(np.diff(E) > tol * E[0]):
            raise linalg.NumericalFailure(f"energy increased along a trajectory at alpha={block.alpha!r}")
        rates.append(_fit_rate(times, E))
    return float(min(rates))


def default_state_family(dim: int, n_random: int = 4, seed: int = 0) -> np.ndarray:
    """Unit-energy states in energy coordinates: the basis plus a few random ones."""
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n_random, dim))
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    return np.vstack([np.eye(dim), R])


def decay_rate_fit(
    params: SystemParams,
    spectrum: SpectrumSpec,
    state_family=None,
    t_grid=None,
    model: str = "timoshenko",
) -> DecayFit:
    """Slowest exponential energy decay over the sample.

    ``state_family`` holds initial states in energy coordinates.  Returns
    the smallest per-mode rate ``kappa`` and the smallest ``K`` with
    ``E(t) <= K E(0) exp(-kappa t)`` on every simulated trajectory.
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, 1e3, 2001)
    t_grid = np.asarray(t_grid, dtype=float)
    per_mode = []
    blocks = [make_block(params, a, model) for a in spectrum.values()]
    for block in blocks:
        fam = default_state_family(block.dim) if state_family is None else np.asarray(state_family)
        states = [np.linalg.solve(block.T, u) for u in fam]
        per_mode.append((block.alpha, mode_decay_rate(block, states, t_grid)))
    kappa = min(k for _, k in per_mode)
    K = 1.0
    for block in blocks:
        fam = default_state_family(block.dim) if state_family is None else np.asarray(state_family)
        for u0 in fam:
            z0 = np.linalg.solve(block.T, u0)
            Z = trajectory(block, z0, t_grid)
            E = np.array([block_energy(block, z) for z in Z])
            K = max(K, float(np.max(E * np.exp(kappa * t_grid)) / E[0]))
    return DecayFit(kappa, K, per_mode)
