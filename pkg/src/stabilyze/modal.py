"""Per-spectral-point reduction of the thermoelastic Timoshenko system.

Replacing the leading operator ``A`` by a scalar ``alpha`` in its spectrum
turns the evolution into a small linear ODE ``z' = L z``.  State order is
always ``(phi, phi_t, psi, psi_t, theta)``; for the wave-heat model it is
``(u, u_t, theta)``.

Energy coordinates ``u = T z`` make the phase-space norm Euclidean, so the
generator becomes ``M = T L T^-1`` = skew-symmetric part plus a single
negative entry on the temperature diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

GAMMA_LIMIT = 4.0

TIMOSHENKO = "timoshenko"
WAVEHEAT = "waveheat"
MODELS = (TIMOSHENKO, WAVEHEAT)


@dataclass(frozen=True)
class SystemParams:
    """Structural coefficients of the Timoshenko system.

    All coefficients are strictly positive; ``gamma`` is the coupling
    exponent and is restricted to ``|gamma| <= 4`` so that ``alpha**(2*gamma)``
    stays finite over the default spectral range.
    """

    rho1: float = 1.0
    rho2: float = 1.0
    rho3: float = 1.0
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    delta: float = 1.0
    gamma: float = 0.5

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho3", "a", "b", "c", "delta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not math.isfinite(self.gamma) or abs(self.gamma) > GAMMA_LIMIT:
            raise ValueError(f"gamma must satisfy |gamma| <= {GAMMA_LIMIT}, got {self.gamma!r}")

    @property
    def chi(self) -> float:
        return self.a / self.rho1 - self.b / self.rho2

    @classmethod
    def with_chi(cls, chi: float, *, rho1=1.0, rho2=1.0, a=1.0, **rest) -> "SystemParams":
        """Build params with a prescribed stability number by solving for ``b``."""
        b = rho2 * (a / rho1 - chi)
        if not b > 0:
            raise ValueError(
                f"b would be non-positive (b = {b!r}) for chi = {chi!r}; need chi < a/rho1 = {a / rho1!r}"
            )
        return cls(rho1=rho1, rho2=rho2, a=a, b=b, **rest)

    def replace(self, **changes) -> "SystemParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return SystemParams(**values)


def stability_number(params: SystemParams) -> float:
    """``a/rho1 - b/rho2``: zero iff both waves propagate at the same speed."""
    return params.a / params.rho1 - params.b / params.rho2


def is_equal_speed(params: SystemParams, tol: float = 1e-12) -> bool:
    scale = max(params.a / params.rho1, params.b / params.rho2)
    return abs(params.chi) <= tol * scale


# ---------------------------------------------------------------------------
# spectrum models


class SpectrumSpec:
    """Finite sample of the spectrum of ``A``.

    Subclasses generate strictly increasing positive values.  ``discrete``
    tells whether the sample stands for a pure point spectrum accumulating
    only at infinity (compact resolvent) or for a continuum.
    """

    discrete = True

    def values(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def lowest(self) -> float:
        """Bottom of the sample, the Poincare constant ``alpha_0``."""
        return float(self.values()[0])

    @property
    def highest(self) -> float:
        return float(self.values()[-1])


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


def _check_count(name, value):
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class ExplicitList(SpectrumSpec):
    points: tuple

    def __post_init__(self):
        pts = tuple(float(v) for v in self.points)
        if not pts:
            raise ValueError("explicit spectrum needs at least one value")
        for v in pts:
            _check_positive("spectral value", v)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("explicit spectral values must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def values(self):
        return np.array(self.points)


@dataclass(frozen=True)
class Dirichlet(SpectrumSpec):
    """Dirichlet Laplacian on ``(0, ell)``: ``alpha_n = (n pi / ell)^2``."""

    ell: float = math.pi
    n_max: int = 200

    def __post_init__(self):
        _check_positive("ell", self.ell)
        _check_count("n_max", self.n_max)

    def values(self):
        n = np.arange(1, int(self.n_max) + 1, dtype=float)
        return (n * math.pi / self.ell) ** 2


@dataclass(frozen=True)
class Geometric(SpectrumSpec):
    alpha0: float = 1.0
    ratio: float = 2.0
    count: int = 20

    def __post_init__(self):
        _check_positive("alpha0", self.alpha0)
        if not (math.isfinite(self.ratio) and self.ratio > 1):
            raise ValueError(f"ratio must be > 1, got {self.ratio!r}")
        _check_count("count", self.count)

    def values(self):
        return self.alpha0 * self.ratio ** np.arange(int(self.count), dtype=float)


@dataclass(frozen=True)
class LogGrid(SpectrumSpec):
    """Log-spaced sample of a continuous spectrum ``[alpha_min, alpha_max]``."""

    alpha_min: float = 1.0
    alpha_max: float = 1e8
    count: int = 400
    discrete = False

    def __post_init__(self):
        _check_positive("alpha_min", self.alpha_min)
        _check_positive("alpha_max", self.alpha_max)
        _check_count("count", self.count)
        if self.count > 1 and not self.alpha_max > self.alpha_min:
            raise ValueError("alpha_max must exceed alpha_min")

    def values(self):
        if int(self.count) == 1:
            return np.array([float(self.alpha_min)])
        return np.logspace(math.log10(self.alpha_min), math.log10(self.alpha_max), int(self.count))


DEFAULT_SPECTRUM = LogGrid(1.0, 1e8, 400)


# ---------------------------------------------------------------------------
# modal blocks


@dataclass(frozen=True)
class ModalBlock:
    alpha: float
    dim: int
    L: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)
    model: str = TIMOSHENKO

    @property
    def dissipation(self) -> float:
        """Decay coefficient on the temperature diagonal of ``M``."""
        return -float(self.M[-1, -1])

    def to_energy(self, z):
        return self.T @ np.asarray(z)

    def from_energy(self, u):
        return np.linalg.solve(self.T, np.asarray(u))


@dataclass(frozen=True)
class ModalState:
    alpha: float
    components: np.ndarray


def _check_alpha(alpha):
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")


def energy_transform(params: SystemParams, alpha: float) -> np.ndarray:
    """Matrix ``T`` with ``|T z|^2 = 2 E(z)`` for the Timoshenko energy."""
    _check_alpha(alpha)
    p = params
    sa = math.sqrt(alpha)
    T = np.zeros((5, 5))
    T[0, 0] = math.sqrt(p.a) * sa
    T[0, 2] = math.sqrt(p.a)
    T[1, 2] = math.sqrt(p.b * alpha)
    T[2, 1] = math.sqrt(p.rho1)
    T[3, 3] = math.sqrt(p.rho2)
    T[4, 4] = math.sqrt(p.rho3)
    return T


def timoshenko_generator(params: SystemParams, alpha: float) -> np.ndarray:
    _check_alpha(alpha)
    p = params
    sa = math.sqrt(alpha)
    ag = alpha ** p.gamma
    L = np.zeros((5, 5))
    L[0, 1] = 1.0
    L[1, 0] = -p.a / p.rho1 * alpha
    L[1, 2] = -p.a / p.rho1 * sa
    L[2, 3] = 1.0
    L[3, 0] = -p.a / p.rho2 * sa
    L[3, 2] = -(p.b * alpha + p.a) / p.rho2
    L[3, 4] = p.delta * ag / p.rho2
    L[4, 3] = -p.delta * ag / p.rho3
    L[4, 4] = -p.c * alpha / p.rho3
    return L


def timoshenko_energy_generator(params: SystemParams, alpha: float) -> np.ndarray:
    """``T L T^-1`` assembled entrywise so the skew part is exact."""
    _check_alpha(alpha)
    p = params
    s13 = math.sqrt(p.a * alpha / p.rho1)
    s14 = math.sqrt(p.a / p.rho2)
    s24 = math.sqrt(p.b * alpha / p.rho2)
    s45 = p.delta * alpha ** p.gamma / math.sqrt(p.rho2 * p.rho3)
    M = np.zeros((5, 5))
    M[0, 2], M[2, 0] = s13, -s13
    M[0, 3], M[3, 0] = s14, -s14
    M[1, 3], M[3, 1] = s24, -s24
    M[3, 4], M[4, 3] = s45, -s45
    M[4, 4] = -p.c * alpha / p.rho3
    return M


def timoshenko_block(params: SystemParams, alpha: float) -> ModalBlock:
    return ModalBlock(
        alpha=float(alpha),
        dim=5,
        L=timoshenko_generator(params, alpha),
        M=timoshenko_energy_generator(params, alpha),
        T=energy_transform(params, alpha),
        model=TIMOSHENKO,
    )


def waveheat_block(gamma: float, alpha: float) -> ModalBlock:
    """Block of ``u'' + A u - A^g theta = 0``, ``theta' + A theta + A^g u' = 0``."""
    _check_alpha(alpha)
    sa = math.sqrt(alpha)
    ag = alpha ** gamma
    L = np.array([[0.0, 1.0, 0.0], [-alpha, 0.0, ag], [0.0, -ag, -alpha]])
    M = np.array([[0.0, sa, 0.0], [-sa, 0.0, ag], [0.0, -ag, -alpha]])
    T = np.diag([sa, 1.0, 1.0])
    return ModalBlock(alpha=float(alpha), dim=3, L=L, M=M, T=T, model=WAVEHEAT)


def make_block(params: SystemParams, alpha: float, model: str = TIMOSHENKO) -> ModalBlock:
    """Dispatch on model name.  The wave-heat model only reads ``params.gamma``."""
    if model == TIMOSHENKO:
        return timoshenko_block(params, alpha)
    if model == WAVEHEAT:
        return waveheat_block(params.gamma, alpha)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def energy(params: SystemParams, alpha: float, z, model: str = TIMOSHENKO) -> float:
    """Phase-space energy ``E = |z|_H^2 / 2`` of a (possibly complex) modal state."""
    z = np.asarray(z)
    if model == WAVEHEAT:
        u, ut, th = z
        return 0.5 * float(alpha * abs(u) ** 2 + abs(ut) ** 2 + abs(th) ** 2)
    p = params
    phi, phit, psi, psit, th = z
    return 0.5 * float(
        p.a * abs(math.sqrt(alpha) * phi + psi) ** 2
        + p.b * alpha * abs(psi) ** 2
        + p.rho1 * abs(phit) ** 2
        + p.rho2 * abs(psit) ** 2
        + p.rho3 * abs(th) ** 2
    )


# ---------------------------------------------------------------------------
# inverse of the generator


def explicit_inverse_apply(params: SystemParams, alpha: float, f: Sequence[complex]) -> np.ndarray:
    """Solve ``L_alpha z = f`` by the closed-form inverse.

    The formulas are the operator-level ones with ``A`` replaced by ``alpha``.
    They hold per mode for any ``gamma``; for ``gamma > 1`` the size of the
    result grows with ``alpha``, which is what the growth diagnostics fit.
    """
    _check_alpha(alpha)
    p = params
    f1, f2, f3, f4, f5 = np.asarray(f)
    g = p.gamma
    dd = p.delta * p.delta
    phi = (
        -(p.rho1 / (p.a * p.b)) * (p.b + p.a / alpha) / alpha * f2
        + dd / (p.b * p.c) * alpha ** (2 * g - 2.5) * f3
        + p.rho2 / p.b * alpha ** -1.5 * f4
        + p.rho3 * p.delta / (p.b * p.c) * alpha ** (g - 2.5) * f5
    )
    psi = (
        p.rho1 / p.b * alpha ** -1.5 * f2
        - dd / (p.b * p.c) * alpha ** (2 * g - 2) * f3
        - p.rho2 / (p.b * alpha) * f4
        - p.rho3 * p.delta / (p.b * p.c) * alpha ** (g - 2) * f5
    )
    theta = -p.delta / p.c * alpha ** (g - 1) * f3 - p.rho3 / (p.c * alpha) * f5
    return np.array([phi, f1, psi, f3, theta])


def explicit_inverse_matrix(params: SystemParams, alpha: float) -> np.ndarray:
    """``L_alpha^-1`` in physical coordinates, column by column."""
    return np.column_stack([explicit_inverse_apply(params, alpha, e) for e in np.eye(5)])


def waveheat_inverse_matrix(gamma: float, alpha: float) -> np.ndarray:
    """Exact inverse of the wave-heat energy generator (back substitution)."""
    sa = math.sqrt(alpha)
    ag = alpha ** gamma
    inv = np.empty((3, 3))
    for j, y in enumerate(np.eye(3)):
        x2 = y[0] / sa
        x3 = -(y[2] + ag * x2) / alpha
        x1 = (ag * x3 - y[1]) / sa
        inv[:, j] = (x1, x2, x3)
    return inv


def energy_inverse(params: SystemParams, alpha: float, model: str = TIMOSHENKO) -> np.ndarray:
    """``M_alpha^-1`` from closed forms; its 2-norm is the phase-space norm of ``L^-1``."""
    if model == WAVEHEAT:
        return waveheat_inverse_matrix(params.gamma, alpha)
    T = energy_transform(params, alpha)
    Linv = explicit_inverse_matrix(params, alpha)
    return T @ Linv @ np.linalg.inv(T)


# ---------------------------------------------------------------------------
# resolvent polynomials of the surjectivity argument for (1 - L)


@dataclass(frozen=True)
class ResolventPolynomials:
    w: float
    v: float
    p1: float
    p2: float
    p3: float
    p4: float
    p5: float
    q1: float
    q2: float
    q3: float
    q4: float
    r1: float
    r2: float
    r3: float
    r4: float

    @property
    def p(self):
        return (self.p1, self.p2, self.p3, self.p4, self.p5)

    @property
    def q(self):
        return (self.q1, self.q2, self.q3, self.q4)

    @property
    def r(self):
        return (self.r1, self.r2, self.r3, self.r4)


def resolvent_polynomials(params: SystemParams, t: float) -> ResolventPolynomials:
    """Evaluate the rational symbols of ``(1 - L)^-1`` at the spectral value ``t``.

    ``phi = sum_i p_i/v f_i``; ``delta A^{g-1} theta - b psi`` has symbols
    ``q1 (f1 + f2), q2 f3, q3 f4, q4 f5`` over ``v``; likewise ``r`` for
    ``c theta + delta A^{g-1} psi_t``.  ``psi_t = h / w`` with ``v = w (rho1 + a t)(rho3 + c t)``.
    """
    _check_alpha(t)
    r1, r2, r3 = params.rho1, params.rho2, params.rho3
    a, b, c, d, g = params.a, params.b, params.c, params.delta, params.gamma
    st = math.sqrt(t)
    t2g = t ** (2 * g)
    A1, B2, C3 = r1 + a * t, r2 + b * t, r3 + c * t
    w = r2 + a + b * t - a * a * t / A1 + d * d * t2g / C3
    v = A1 * B2 * C3 + a * r1 * C3 + d * d * t2g * A1
    return ResolventPolynomials(
        w=w,
        v=v,
        p1=r1 * (B2 * C3 + a * C3 + d * d * t2g),
        p2=r1 * ((r2 + a + b * t) * C3 + d * d * t2g),
        p3=-a * st * (r2 * C3 + d * d * t2g),
        p4=-a * st * r2 * C3,
        p5=-r3 * d * a * t ** (g + 0.5),
        q1=r1 * a * (d * d * t ** (2 * g - 0.5) + b * st * C3),
        q2=r1 * a * d * d * t ** (2 * g - 1) - b * r2 * A1 * C3,
        q3=-r2 * A1 * (d * d * t ** (2 * g - 1) + b * C3),
        q4=r3 * d * t ** (g - 1) * (a * r1 + r2 * A1),
        r1=-r1 * r3 * a * d * t ** (g - 0.5),
        r2=-r3 * d * t ** (g - 1) * (r1 * a + r1 * b * t + a * b * t * t),
        r3=r2 * r3 * d * t ** (g - 1) * A1,
        r4=c * r3 * (a * r1 + A1 * B2) + r3 * d * d * t ** (2 * g - 1) * A1,
    )
