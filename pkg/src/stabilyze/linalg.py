"""Dense kernels for the 3x3 and 5x5 modal matrices.

Thin wrappers around LAPACK (through numpy/scipy) that turn silent
failures into exceptions and accept stacks of matrices where that is
cheap.
"""
import numpy as np
import scipy.linalg

EXP_LIMIT = 700.0


class NumericalFailure(ArithmeticError):
    """A kernel did not converge or produced non-finite output."""


class SingularSystemError(NumericalFailure):
    pass


class ExpmOverflowError(NumericalFailure, OverflowError):
    pass


def _finite(m, what):
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise NumericalFailure(f"{what}: non-finite entries")
    return m


def eigenvalues(m) -> np.ndarray:
    m = _finite(m, "eigenvalues")
    try:
        w = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalues did not converge: {exc}") from exc
    return _finite(w, "eigenvalues")


def eig(m):
    """Eigenvalues and right eigenvectors (columns)."""
    m = _finite(m, "eig")
    try:
        w, v = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eig did not converge: {exc}") from exc
    return w, v


def singular_values(m) -> np.ndarray:
    """Singular values in descending order; works on stacks ``(..., n, n)``."""
    m = _finite(m, "singular_values")
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def smallest_singular_value(m):
    return singular_values(m)[..., -1]


def operator_norm(m):
    return singular_values(m)[..., 0]


def solve(m, rhs, rcond: float = 1e-14) -> np.ndarray:
    m = _finite(m, "solve")
    s = singular_values(m)
    if s[-1] <= rcond * s[0]:
        raise SingularSystemError(f"matrix is numerically singular (sigma_min/sigma_max = {s[-1] / s[0]:.3e})")
    return np.linalg.solve(m, rhs)


def expm(m, t: float = 1.0) -> np.ndarray:
    """``exp(t m)`` by scaling and squaring (Pade).

    Accepts a stack of matrices.  Raises when ``t * abscissa`` would push
    entries beyond the double range.
    """
    if t < 0:
        raise ValueError("expm is only defined here for t >= 0")
    m = _finite(m, "expm")
    if t == 0:
        return np.broadcast_to(np.eye(m.shape[-1]), m.shape).copy()
    abscissa = float(np.max(eigenvalues(m).real))
    if t * abscissa > EXP_LIMIT:
        raise ExpmOverflowError(f"t * abscissa = {t * abscissa:.3e} exceeds {EXP_LIMIT}")
    return _finite(scipy.linalg.expm(t * m), "expm")
