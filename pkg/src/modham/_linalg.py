"""Internal dense linear-algebra helpers.

Everything here reduces to symmetric eigenproblems or pivoted linear solves:

- SPD square roots use eigendecomposition with a hard clamp threshold; an
  eigenvalue below the clamp is an error, never silently regularized.
- Functions of the non-symmetric product X P are evaluated through the SPD
  similarity  f(X P) = X^{1/2} f(X^{1/2} P X^{1/2}) X^{-1/2}.
- Matrix-valued integrals use an adaptive Gauss-Kronrod 15(7) rule with a
  Frobenius-norm error estimate and a hard evaluation cap.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericalError, QuadratureNotConverged

# Eigenvalues of an SPD matrix below this are treated as zero modes.
EIG_CLAMP = 1e-14


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Relative Frobenius distance ||a - b|| / ||b|| (0 for two zero matrices)."""
    nb = frob(b)
    if nb == 0.0:
        return frob(a)
    return frob(a - b) / nb


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def spd_eigh(mat: np.ndarray, what: str = "matrix"):
    """Eigendecomposition of an SPD matrix, rejecting clamped eigenvalues."""
    w, u = np.linalg.eigh(symmetrize(mat))
    if w.min() <= EIG_CLAMP:
        raise NumericalError(
            f"{what} is not positive definite beyond the clamp threshold "
            f"{EIG_CLAMP:g} (min eigenvalue {w.min():.3e})"
        )
    return w, u


def spd_power(mat: np.ndarray, exponent: float, what: str = "matrix") -> np.ndarray:
    w, u = spd_eigh(mat, what)
    return (u * w**exponent) @ u.T


def spd_sqrt_pair(mat: np.ndarray, what: str = "matrix"):
    """Return (mat^{1/2}, mat^{-1/2}) from a single eigendecomposition."""
    w, u = spd_eigh(mat, what)
    s = np.sqrt(w)
    return (u * s) @ u.T, (u / s) @ u.T


class SymmetrizedFrame:
    """Congruence frame of an SPD Gram matrix.

    Conjugating a mu-self-adjoint operator A with Gram^{1/2} yields a
    symmetric matrix, so every spectral step becomes a symmetric
    eigenproblem.  ``to_frame``/``from_frame`` move operators in and out.
    """

    def __init__(self, gram: np.ndarray):
        self.gram = gram
        self.sqrt, self.inv_sqrt = spd_sqrt_pair(gram, "Gram matrix")
        w, _ = np.linalg.eigh(symmetrize(gram))
        self.cond = float(w.max() / w.min())

    def to_frame(self, op: np.ndarray) -> np.ndarray:
        return self.sqrt @ op @ self.inv_sqrt

    def from_frame(self, op: np.ndarray) -> np.ndarray:
        return self.inv_sqrt @ op @ self.sqrt


def product_spectrum(x_mat: np.ndarray, p_mat: np.ndarray):
    """Mode data of the product X P for SPD X, P.

    Returns ``(c, basis, x_sqrt, x_inv_sqrt)`` where ``c`` are the square
    roots of the eigenvalues of X^{1/2} P X^{1/2} in ascending order and
    ``basis`` the corresponding orthonormal eigenvectors.
    """
    x_sqrt, x_inv_sqrt = spd_sqrt_pair(x_mat, "X correlator")
    sym = symmetrize(x_sqrt @ p_mat @ x_sqrt)
    lam, basis = np.linalg.eigh(sym)
    lam = np.clip(lam, 0.0, None)
    return np.sqrt(lam), basis, x_sqrt, x_inv_sqrt


def product_function(
    x_mat: np.ndarray,
    p_mat: np.ndarray,
    fn: Callable[[np.ndarray], np.ndarray],
):
    """Evaluate f(X P) through the SPD similarity transform.

    ``fn`` receives the array of c-values (square roots of the spectrum of
    X^{1/2} P X^{1/2}) and must return the scalar function values.
    """
    c, basis, x_sqrt, x_inv_sqrt = product_spectrum(x_mat, p_mat)
    vals = fn(c)
    return x_sqrt @ ((basis * vals) @ basis.T) @ x_inv_sqrt, c


# Gauss-Kronrod 15(7) nodes and weights on [-1, 1].
_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_GK_KRONROD_W = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_GK_GAUSS_W = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])


def adaptive_matrix_quadrature(
    integrand: Callable[[float], np.ndarray],
    a: float,
    b: float,
    abs_tol: float,
    max_evals: int = 200_000,
):
    """Adaptively integrate a matrix-valued function over [a, b].

    Bisects the segment with the largest Kronrod-Gauss discrepancy until the
    summed error estimate drops below ``abs_tol``.  Raises
    :class:`QuadratureNotConverged` when the evaluation cap is reached.

    Returns ``(integral, error_bound, n_evals)``.
    """
    evals = 0

    def gk_segment(lo: float, hi: float):
        nonlocal evals
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        values = [integrand(mid + half * xi) for xi in _GK_NODES]
        evals += len(values)
        kronrod = half * sum(w * v for w, v in zip(_GK_KRONROD_W, values))
        gauss = half * sum(
            w * values[2 * i + 1] for i, w in enumerate(_GK_GAUSS_W)
        )
        return kronrod, frob(kronrod - gauss)

    segments = [(a, b, *gk_segment(a, b))]
    while True:
        total_err = sum(seg[3] for seg in segments)
        if total_err <= abs_tol:
            break
        if evals >= max_evals:
            raise QuadratureNotConverged(
                f"quadrature error {total_err:.3e} above tolerance "
                f"{abs_tol:.3e} after {evals} evaluations",
                achieved_error=total_err,
            )
        segments.sort(key=lambda seg: seg[3], reverse=True)
        lo, hi, _, _ = segments.pop(0)
        mid = 0.5 * (lo + hi)
        segments.append((lo, mid, *gk_segment(lo, mid)))
        segments.append((mid, hi, *gk_segment(mid, hi)))

    integral = sum(seg[2] for seg in segments)
    return integral, sum(seg[3] for seg in segments), evals
