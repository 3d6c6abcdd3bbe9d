"""Stability certificates computed over a sampled spectrum.

Each spectral value ``alpha`` contributes one energy-coordinate block
``M_alpha``.  The quantities here are suprema/infima over the *sample*;
for a continuum spectrum they bound the operator-level values from one
side only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .modal import (
    TIMOSHENKO,
    WAVEHEAT,
    ModalBlock,
    SpectrumSpec,
    SystemParams,
    energy_inverse,
    is_equal_speed,
    make_block,
)

EXPONENTIAL = "Exponential"
SEMIUNIFORM = "Semiuniform"
STABLE_ONLY = "StableOnly"
NOT_SEMIUNIFORM = "NotSemiuniform"
INDETERMINATE = "Indeterminate"
# analytic-only labels
NOT_EXPONENTIAL = "NotExponential"
OPEN = "Open"


def fit_loglog(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def top_decades(alphas, decades: float) -> np.ndarray:
    """Mask selecting ``alpha >= alpha_max / 10**decades``."""
    alphas = np.asarray(alphas)
    return alphas >= alphas[-1] / 10.0 ** decades * (1 - 1e-12)


# ---------------------------------------------------------------------------
# spectral abscissa


def mode_real_parts(M: np.ndarray) -> np.ndarray:
    """Real parts of the eigenvalues of a dissipative block, refined.

    For ``M = K - d e e^T`` with ``K`` skew, an eigenpair ``(lam, x)`` has
    ``Re lam = -d |x_last|^2 / |x|^2``.  The last component is rebuilt from
    the last row of the eigen-equation whenever that is well conditioned,
    which keeps tiny real parts accurate far below ``eps * |M|`` and never
    positive.
    """
    w, V = linalg.eig(M)
    d = -M[-1, -1]
    out = np.empty(len(w))
    for k in range(len(w)):
        x = V[:, k].copy()
        lam = w[k]
        if d > 0 and abs(lam + d) >= 0.5 * d:
            x[-1] = -(M[-1, :-1] @ x[:-1]) / (lam + d)
        out[k] = -d * abs(x[-1]) ** 2 / np.vdot(x, x).real
    return out


def spectral_abscissa(block: ModalBlock) -> float:
    return float(np.max(mode_real_parts(block.M)))


def uniform_abscissa(params: SystemParams, spectrum: SpectrumSpec, model: str = TIMOSHENKO):
    """Largest per-mode abscissa over the sample and the ``alpha`` attaining it."""
    alphas = spectrum.values()
    values = np.array([spectral_abscissa(make_block(params, a, model)) for a in alphas])
    k = int(np.argmax(values))
    return float(values[k]), float(alphas[k])


def abscissa_profile(params, spectrum, model=TIMOSHENKO) -> np.ndarray:
    return np.array([spectral_abscissa(make_block(params, a, model)) for a in spectrum.values()])


# ---------------------------------------------------------------------------
# resolvent scans on the imaginary axis


def witness_frequencies(params: SystemParams, alpha) -> tuple:
    """Frequencies used by the non-decay witnesses at one spectral value."""
    p = params
    alpha = np.asarray(alpha, dtype=float)
    lam_wave = np.sqrt(p.a * alpha / p.rho1)
    beta = (
        2 * p.rho2 * p.a * alpha + p.a * p.rho1 + p.a * np.sqrt(p.rho1**2 + 4 * p.rho1 * p.rho2 * alpha)
    ) / (2 * p.rho1 * p.rho2)
    return lam_wave, np.sqrt(beta)


def default_lambda_grid(
    params: SystemParams,
    spectrum: SpectrumSpec,
    model: str = TIMOSHENKO,
    n: int = 2000,
    lambda_min: float = 1e-2,
) -> np.ndarray:
    """Log grid on ``[lambda_min, 2 sqrt(a alpha_max / rho1)]`` plus 0 and the witness frequencies."""
    alphas = spectrum.values()
    if model == WAVEHEAT:
        top = 2 * math.sqrt(alphas[-1])
        extra = [np.sqrt(alphas)]
    else:
        top = 2 * math.sqrt(params.a * alphas[-1] / params.rho1)
        extra = list(witness_frequencies(params, alphas))
    top = max(top, 10 * lambda_min)
    grid = np.concatenate([[0.0], np.logspace(math.log10(lambda_min), math.log10(top), n), *extra])
    return np.unique(grid)


@dataclass
class ResolventScan:
    lambda_grid: np.ndarray = field(repr=False)
    alphas: np.ndarray = field(repr=False)
    sigma_min: np.ndarray = field(repr=False)  # shape (n_alpha, n_lambda)
    margin: float
    alpha_star: float
    lambda_star: float

    @property
    def per_alpha(self) -> np.ndarray:
        """Smallest singular value over the grid, for each sampled ``alpha``."""
        return self.sigma_min.min(axis=1)

    @property
    def per_alpha_argmin(self) -> np.ndarray:
        return self.lambda_grid[np.argmin(self.sigma_min, axis=1)]

    def trend(self, decades: float = 2.0) -> float:
        """Log-log slope of the per-alpha margin over the top decades of the sample."""
        mask = top_decades(self.alphas, decades)
        if mask.sum() < 2:
            return 0.0
        return fit_loglog(self.alphas[mask], np.maximum(self.per_alpha[mask], np.finfo(float).tiny))


def resolvent_sigma(M: np.ndarray, lambdas) -> np.ndarray:
    """``sigma_min(i lam I - M)`` for every ``lam`` in ``lambdas``."""
    lambdas = np.asarray(lambdas, dtype=float)
    n = M.shape[0]
    stack = 1j * lambdas[:, None, None] * np.eye(n) - M
    return linalg.smallest_singular_value(stack)


def pruss_margin(
    params: SystemParams,
    spectrum: SpectrumSpec,
    lambda_grid=None,
    model: str = TIMOSHENKO,
) -> ResolventScan:
    """Minimum of ``sigma_min(i lam - M_alpha)`` over sample x grid.

    Only ``lam >= 0`` is scanned: for real ``M`` the value at ``-lam`` is
    the same.  The grid defaults to :func:`default_lambda_grid`.
    """
    alphas = spectrum.values()
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(params, spectrum, model)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    table = np.empty((len(alphas), len(lambda_grid)))
    for i, a in enumerate(alphas):
        table[i] = resolvent_sigma(make_block(params, a, model).M, lambda_grid)
    i, j = np.unravel_index(int(np.argmin(table)), table.shape)
    return ResolventScan(
        lambda_grid=lambda_grid,
        alphas=alphas,
        sigma_min=table,
        margin=float(table[i, j]),
        alpha_star=float(alphas[i]),
        lambda_star=float(lambda_grid[j]),
    )


# ---------------------------------------------------------------------------
# witness sequences


@dataclass(frozen=True)
class WitnessCase:
    case_id: str
    c1: float
    c2: float
    watched_component: str
    predicted_exponent: float

    def frequency(self, params: SystemParams, alpha: float) -> float:
        lam_wave, lam_beta = witness_frequencies(params, alpha)
        return float(lam_beta if self.case_id == "III" else lam_wave)

    def watched(self, z: np.ndarray) -> float:
        if self.watched_component == "re_phi_t":
            return abs(z[1].real)
        if self.watched_component == "im_phi_t":
            return abs(z[1].imag)
        return abs(z[3].real)


class WitnessCaseError(ValueError):
    pass


def witness_case(params: SystemParams) -> WitnessCase:
    """Pick the blow-up construction matching ``(gamma, chi)``.

    I: gamma > 1/2.  II: gamma <= 1/2 and chi != 0.  III: gamma < 1/2 and chi = 0.
    """
    g = params.gamma
    equal = is_equal_speed(params)
    half = math.isclose(g, 0.5, rel_tol=0, abs_tol=1e-12)
    if g > 0.5 and not half:
        return WitnessCase("I", 1 / math.sqrt(params.rho1), 0.0, "re_phi_t", 2 * g - 1)
    if not equal:
        return WitnessCase("II", 1 / math.sqrt(params.rho1), 0.0, "im_phi_t", 0.5)
    if not half:
        return WitnessCase("III", 0.0, 1 / math.sqrt(params.rho2), "re_psi_t", 1 - 2 * g)
    raise WitnessCaseError("chi = 0 and gamma = 1/2: no witness exists (exponentially stable point)")


@dataclass
class WitnessScan:
    case: WitnessCase
    fitted_exponent: float
    per_alpha: list  # (alpha, lambda, magnitude)


def _detuning(params: SystemParams, alpha: float, case: WitnessCase) -> float:
    """``rho1 lam^2 - a alpha`` at the witness frequency, without cancellation."""
    if case.case_id == "III":
        p = params
        return (p.a * p.rho1 + p.a * math.sqrt(p.rho1**2 + 4 * p.rho1 * p.rho2 * alpha)) / (2 * p.rho2)
    return 0.0


def witness_solution(params: SystemParams, alpha: float, case: WitnessCase) -> np.ndarray:
    """Solve ``(i lam I - L_alpha) z = (0, c1, 0, c2, 0)`` in physical coordinates.

    At large ``alpha`` the 5x5 system is singular to working precision
    (that is the point of the witness), so it is reduced by hand: the
    temperature is eliminated through the heat row, leaving a 2x2 system
    for the velocities whose near-resonant entry ``a alpha - rho1 lam^2``
    is evaluated in closed form.
    """
    p = params
    lam = case.frequency(p, alpha)
    il = 1j * lam
    sa = math.sqrt(alpha)
    ag = alpha ** p.gamma
    q = _detuning(p, alpha, case)
    # rows multiplied through by rho1 and rho2 respectively
    e11 = -q
    e12 = p.a * sa
    e21 = p.a * sa
    heat = il * p.delta**2 * ag * ag / (il * p.rho3 + p.c * alpha)
    e22 = p.a - p.chi * p.rho2 * alpha - p.rho2 / p.rho1 * q + heat
    r1 = il * p.rho1 * case.c1
    r2 = il * p.rho2 * case.c2
    det = e11 * e22 - e12 * e21
    if det == 0 or not np.isfinite(det):
        raise linalg.SingularSystemError(f"witness resolvent singular at alpha={alpha!r}")
    phit = (r1 * e22 - e12 * r2) / det
    psit = (e11 * r2 - e21 * r1) / det
    theta = -p.delta * ag * psit / (il * p.rho3 + p.c * alpha)
    return np.array([phit / il, phit, psit / il, psit, theta])


def witness_scan(params: SystemParams, spectrum: SpectrumSpec, fit_decades: float = 2.0) -> WitnessScan:
    case = witness_case(params)
    rows = []
    for a in spectrum.values():
        z = witness_solution(params, a, case)
        rows.append((float(a), case.frequency(params, a), case.watched(z)))
    alphas = np.array([r[0] for r in rows])
    mags = np.array([r[2] for r in rows])
    mask = top_decades(alphas, fit_decades)
    return WitnessScan(case, fit_loglog(alphas[mask], mags[mask]), rows)


# ---------------------------------------------------------------------------
# inverse growth and semiuniform decay


def inverse_norms(params, spectrum, model=TIMOSHENKO) -> np.ndarray:
    return np.array([linalg.operator_norm(energy_inverse(params, a, model)) for a in spectrum.values()])


def inverse_norm_growth(
    params: SystemParams,
    spectrum: SpectrumSpec,
    model: str = TIMOSHENKO,
    fit_decades: float = 2.0,
    threshold: float = 0.1,
) -> Optional[float]:
    """Fitted growth exponent of ``|M_alpha^-1|``, or ``None`` when bounded."""
    alphas = spectrum.values()
    norms = inverse_norms(params, spectrum, model)
    mask = top_decades(alphas, fit_decades)
    if mask.sum() < 2:
        return None
    slope = fit_loglog(alphas[mask], norms[mask])
    return slope if slope > threshold else None


@dataclass
class DecayCurve:
    times: np.ndarray
    h: np.ndarray
    vanishing: bool
    exp_rate: float
    exp_residual: float
    power_rate: float
    power_residual: float


def _fit_residual(x, y):
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def semiuniform_decay(
    params: SystemParams,
    spectrum: SpectrumSpec,
    times,
    model: str = TIMOSHENKO,
    threshold: float = 0.1,
) -> DecayCurve:
    """``h(t) = max_alpha |exp(t M_alpha) M_alpha^-1|`` on the given times.

    Also fits ``log h`` against ``t`` (exponential rate) and against
    ``log t`` (power rate) on the positive times, reporting RMS residuals
    so callers can tell which model describes the tail.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be ascending, non-negative, at least two entries")
    alphas = spectrum.values()
    Ms = np.stack([make_block(params, a, model).M for a in alphas])
    Minv = np.stack([energy_inverse(params, a, model) for a in alphas])
    h = np.empty(times.size)
    for k, t in enumerate(times):
        E = linalg.expm(Ms, t)
        h[k] = float(np.max(linalg.operator_norm(E @ Minv)))
    vanishing = bool(h[-1] / h[0] < threshold)
    pos = (times > 0) & (h > 0)
    logh = np.log(h[pos])
    exp_rate, exp_res = _fit_residual(times[pos], logh)
    pow_rate, pow_res = _fit_residual(np.log(times[pos]), logh)
    return DecayCurve(times, h, vanishing, -exp_rate, exp_res, -pow_rate, pow_res)


def default_decay_times(t_max: float = 1e3, n: int = 60) -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-2, math.log10(t_max), n)])


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassifyOptions:
    margin_threshold: float = 1e-6
    abscissa_threshold: float = 1e-8
    decay_threshold: float = 0.1
    # per-alpha margin falling faster than this slope counts as vanishing
    trend_threshold: float = -0.1
    growth_threshold: float = 0.1
    fit_decades: float = 2.0
    n_lambda: int = 2000
    lambda_min: float = 1e-2
    decay_t_max: float = 1e3
    decay_n_times: int = 60


@dataclass
class StabilityReport:
    params: SystemParams
    model: str
    sup_abscissa: float
    argmax_alpha: float
    all_modes_decay: bool
    pruss_margin: float
    margin_trend: float
    inverse_growth_exponent: Optional[float]
    witness_exponent_fit: Optional[float]
    witness_case: Optional[str]
    decay_vanishing: Optional[bool]
    numerical_verdict: str
    analytic_prediction: str
    classification: str
    agree: bool


def analytic_prediction(params: SystemParams, spectrum: SpectrumSpec, model: str = TIMOSHENKO) -> str:
    """Verdict the analytic results give for ``(chi, gamma)`` and the spectrum type."""
    g = params.gamma
    half = math.isclose(g, 0.5, rel_tol=0, abs_tol=1e-12)
    if model == WAVEHEAT:
        return EXPONENTIAL if (half or 0.5 <= g <= 1.0) else NOT_EXPONENTIAL
    if g > 1:
        return NOT_SEMIUNIFORM
    if half and is_equal_speed(params):
        return EXPONENTIAL
    if g >= 0.5 or half:
        return SEMIUNIFORM
    return SEMIUNIFORM if spectrum.discrete else OPEN


_COMPATIBLE = {
    EXPONENTIAL: {EXPONENTIAL},
    SEMIUNIFORM: {SEMIUNIFORM},
    NOT_SEMIUNIFORM: {NOT_SEMIUNIFORM},
    NOT_EXPONENTIAL: {SEMIUNIFORM, STABLE_ONLY, NOT_SEMIUNIFORM},
    OPEN: {SEMIUNIFORM, STABLE_ONLY},
}


def reconcile(verdict: str, prediction: str) -> tuple:
    """Final label and agreement flag.

    Disagreement downgrades to Indeterminate.  Where the theory is open the
    modal evidence is only reported as StableOnly.
    """
    agree = verdict in _COMPATIBLE[prediction]
    if not agree:
        return INDETERMINATE, False
    if prediction == OPEN:
        return STABLE_ONLY, True
    return verdict, True


def classify(
    params: SystemParams,
    spectrum: SpectrumSpec,
    options: ClassifyOptions = ClassifyOptions(),
    model: str = TIMOSHENKO,
) -> StabilityReport:
    opts = options
    profile = abscissa_profile(params, spectrum, model)
    k = int(np.argmax(profile))
    sup_abs = float(profile[k])
    all_decay = bool(np.all(profile < 0))

    grid = default_lambda_grid(params, spectrum, model, opts.n_lambda, opts.lambda_min)
    scan = pruss_margin(params, spectrum, grid, model)
    trend = scan.trend(opts.fit_decades)

    growth = inverse_norm_growth(params, spectrum, model, opts.fit_decades, opts.growth_threshold)

    witness = None
    case_id = None
    if model == TIMOSHENKO:
        try:
            ws = witness_scan(params, spectrum, opts.fit_decades)
            witness, case_id = ws.fitted_exponent, ws.case.case_id
        except WitnessCaseError:
            pass

    vanishing = None
    if growth is not None:
        verdict = NOT_SEMIUNIFORM
    elif (
        scan.margin >= opts.margin_threshold
        and trend >= opts.trend_threshold
        and sup_abs <= -opts.abscissa_threshold
    ):
        verdict = EXPONENTIAL
    else:
        times = default_decay_times(opts.decay_t_max, opts.decay_n_times)
        curve = semiuniform_decay(params, spectrum, times, model, opts.decay_threshold)
        vanishing = curve.vanishing
        if vanishing:
            verdict = SEMIUNIFORM
        elif all_decay:
            verdict = STABLE_ONLY
        else:
            verdict = INDETERMINATE

    prediction = analytic_prediction(params, spectrum, model)
    label, agree = reconcile(verdict, prediction)
    return StabilityReport(
        params=params,
        model=model,
        sup_abscissa=sup_abs,
        argmax_alpha=float(spectrum.values()[k]),
        all_modes_decay=all_decay,
        pruss_margin=scan.margin,
        margin_trend=trend,
        inverse_growth_exponent=growth,
        witness_exponent_fit=witness,
        witness_case=case_id,
        decay_vanishing=vanishing,
        numerical_verdict=verdict,
        analytic_prediction=prediction,
        classification=label,
        agree=agree,
    )
