"""Restricted correlators, the operator C = sqrt(X P) and the M/N kernels.

Restricting the pure-state correlators to a region R gives SPD matrices
X_R, P_R whose product has spectrum bounded below by 1/4 (the uncertainty
bound of a valid state).  Writing ``C = sqrt(X_R P_R)`` with eigenvalues
``c >= 1/2``, the region block of the modular generator reads

    I ln Delta |_R = [[0, 2 M], [-2 N, 0]],
    M = P_R (2C)^{-1} ln((2C + 1)(2C - 1)^{-1}),
    N = (2C)^{-1} ln((2C + 1)(2C - 1)^{-1}) X_R ,

where every function of the non-symmetric product X_R P_R is evaluated
through the SPD similarity ``f(X P) = X^{1/2} f(X^{1/2} P X^{1/2}) X^{-1/2}``.

Eigenvalues at c = 1/2 are unentangled directions where the generator
diverges logarithmically.  By default they are a hard error; clipping the
spectrum away from 1/2 is possible but always explicit and reported, and
:func:`purify_restriction` turns any (possibly regularized) restricted
state into a pure two-block state on a doubled region, which is the clean
way to study degenerate regions with the full-space machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import frob, product_spectrum, symmetrize
from .errors import (
    EmptyRegion,
    InvalidParameter,
    ModularDivergence,
    NumericalError,
    PositivityViolation,
)
from .lattice import GaussianState
from .regions import Region, validate_region

POSITIVITY_TOL = 1e-10
SYMMETRY_TOL = 1e-12
DEFAULT_SING_TOL = 1e-10
XR_COND_LIMIT = 1e12


@dataclass(frozen=True)
class RestrictedCorrelators:
    """Field and momentum correlators restricted to a region."""

    region: Region
    X_R: np.ndarray = field(repr=False)
    P_R: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.region)


@dataclass(frozen=True)
class RegionKernels:
    """The region-restricted generator data.

    ``L_block`` is the 2r x 2r block matrix [[0, 2M], [-2N, 0]] equal to the
    region block of ``I ln Delta``.  ``c_spectrum`` holds the unclipped
    eigenvalues of C in ascending order; when clipping was requested,
    ``clipped_modes`` lists the indices whose logarithm was evaluated at the
    clipped value ``1/2 + clip`` instead.
    """

    region: Region
    C: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    L_block: np.ndarray = field(repr=False)
    c_spectrum: np.ndarray = field(repr=False)
    clip: float | None = None
    clipped_modes: tuple = ()


def _log_ratio(c: np.ndarray) -> np.ndarray:
    """The scalar map f(c) = ln((2c + 1)/(2c - 1)) / (2c), c > 1/2."""
    return np.log((2.0 * c + 1.0) / (2.0 * c - 1.0)) / (2.0 * c)


def restrict_correlators(state: GaussianState, region: Region) -> RestrictedCorrelators:
    """Principal submatrices of the correlators on the region's sites.

    Raises
    ------
    EmptyRegion
        For an empty region.
    PositivityViolation
        If the spectrum of X_R P_R drops below 1/4 - 1e-10, which signals an
        invalid state or numerical breakdown.
    """
    if len(region) == 0:
        raise EmptyRegion("cannot restrict correlators to an empty region")
    validate_region(region, state.n_sites)
    idx = region.indices()
    grid = np.ix_(idx, idx)
    x_r = np.asarray(state.X_full[grid])
    p_r = np.asarray(state.P_full[grid])
    for name, mat in (("X_R", x_r), ("P_R", p_r)):
        asym = frob(mat - mat.T) / max(frob(mat), 1e-300)
        if asym > SYMMETRY_TOL:
            raise NumericalError(f"{name} lost symmetry: {asym:.3e}")
    c, _, _, _ = product_spectrum(x_r, p_r)
    if np.min(c**2) < 0.25 - POSITIVITY_TOL:
        raise PositivityViolation(
            f"spec(X_R P_R) reaches {np.min(c**2):.12e} < 1/4 - {POSITIVITY_TOL:g}"
        )
    return RestrictedCorrelators(region, symmetrize(x_r), symmetrize(p_r))


def symplectic_spectrum(rc: RestrictedCorrelators) -> np.ndarray:
    """Eigenvalues of C = sqrt(X_R P_R) in ascending order."""
    c, _, _, _ = product_spectrum(rc.X_R, rc.P_R)
    return c


def compute_C(rc: RestrictedCorrelators) -> np.ndarray:
    """The (generally non-symmetric) square root C with C^2 = X_R P_R."""
    w = np.linalg.eigvalsh(symmetrize(rc.X_R))
    cond = w.max() / w.min() if w.min() > 0 else np.inf
    if cond > XR_COND_LIMIT:
        raise NumericalError(
            f"X_R condition number {cond:.3e} exceeds {XR_COND_LIMIT:g}; "
            f"C = sqrt(X P) is unreliable"
        )
    c, basis, x_sqrt, x_inv_sqrt = product_spectrum(rc.X_R, rc.P_R)
    return x_sqrt @ ((basis * c) @ basis.T) @ x_inv_sqrt


def mn_block_generator(
    x_r: np.ndarray,
    p_r: np.ndarray,
    divergence_tol: float = 0.0,
    zero_below: float | None = None,
    clip: float | None = None,
):
    """Assemble [[0, 2M], [-2N, 0]] from raw correlator blocks.

    Low-level routine shared by the kernel and subspace modules.  Modes with
    ``c <= zero_below`` contribute zero (the trivial-direction convention of
    the full-space machinery); modes with ``c - 1/2 <= divergence_tol`` that
    are not mapped to zero raise :class:`ModularDivergence` unless ``clip``
    is given, in which case the logarithm is evaluated at ``1/2 + clip``.

    Returns ``(block, c)`` with the unclipped c-spectrum in ascending order.
    """
    c, basis, x_sqrt, x_inv_sqrt = product_spectrum(x_r, p_r)
    zeroed = np.zeros_like(c, dtype=bool)
    if zero_below is not None:
        zeroed = c <= zero_below
    offending = (c - 0.5 <= divergence_tol) & ~zeroed
    clipped_idx: tuple = ()
    c_eff = c.copy()
    if offending.any():
        if clip is None:
            raise ModularDivergence(
                f"{int(offending.sum())} mode(s) within {divergence_tol:g} of "
                f"c = 1/2; the modular generator diverges on nearly "
                f"unentangled modes (pass clip=... to regularize explicitly)",
                eigenvalues=c[offending],
            )
        if clip <= 0:
            raise InvalidParameter(f"clip must be positive, got {clip!r}")
        clipped = c < 0.5 + clip
        c_eff = np.maximum(c, 0.5 + clip)
        clipped_idx = tuple(int(i) for i in np.flatnonzero(clipped & ~zeroed))
    vals = np.zeros_like(c)
    active = ~zeroed
    vals[active] = _log_ratio(c_eff[active])
    f_of_product = x_sqrt @ ((basis * vals) @ basis.T) @ x_inv_sqrt
    m_kernel = p_r @ f_of_product
    n_kernel = f_of_product @ x_r
    r = x_r.shape[0]
    block = np.zeros((2 * r, 2 * r))
    block[:r, r:] = 2.0 * m_kernel
    block[r:, :r] = -2.0 * n_kernel
    return block, c


def mn_kernels(
    rc: RestrictedCorrelators,
    sing_tol: float = DEFAULT_SING_TOL,
    clip: float | None = None,
) -> RegionKernels:
    """M and N kernels and the block generator of a restricted state.

    Parameters
    ----------
    sing_tol : float
        Modes with ``c - 1/2 <= sing_tol`` trigger :class:`ModularDivergence`
        unless ``clip`` is given.
    clip : float, optional
        Evaluate the logarithm at ``c = 1/2 + clip`` for all modes below
        that value; the affected modes are reported in the result.
    """
    block, c = mn_block_generator(
        rc.X_R, rc.P_R, divergence_tol=sing_tol, clip=clip
    )
    clipped: tuple = ()
    if clip is not None:
        clipped = tuple(int(i) for i in np.flatnonzero(c < 0.5 + clip))
    r = rc.size
    return RegionKernels(
        region=rc.region,
        C=compute_C(rc),
        M=0.5 * block[:r, r:],
        N=-0.5 * block[r:, :r],
        L_block=block,
        c_spectrum=c,
        clip=clip,
        clipped_modes=clipped,
    )


def lndelta_region_via_G(
    rc: RestrictedCorrelators,
    sing_tol: float = DEFAULT_SING_TOL,
    complex_path: bool = False,
) -> np.ndarray:
    """Region generator from the two-point function kernel.

    Assembles the complex combination ``2 eps G|_R + i 1`` whose imaginary
    parts cancel exactly, leaving [[0, 2 P_R], [-2 X_R, 0]], and evaluates
    ``-2 arccot`` of it.  The default path squares the block matrix and
    reduces to SPD spectral calculus in real arithmetic; ``complex_path``
    instead diagonalizes the block matrix and applies the principal-branch
    arccot to its (purely imaginary) eigenvalues, as an independent
    validation of the real-arithmetic assembly.

    Returns the real 2r x 2r matrix equal to ``L_block`` of
    :func:`mn_kernels`.
    """
    r = rc.size
    g_r = np.zeros((2 * r, 2 * r), dtype=complex)
    g_r[:r, :r] = rc.X_R
    g_r[r:, r:] = rc.P_R
    g_r[:r, r:] = 0.5j * np.eye(r)
    g_r[r:, :r] = -0.5j * np.eye(r)
    eps_r = np.zeros((2 * r, 2 * r))
    eps_r[:r, r:] = np.eye(r)
    eps_r[r:, :r] = -np.eye(r)
    q_complex = 2.0 * eps_r @ g_r + 1j * np.eye(2 * r)
    imag_defect = float(np.max(np.abs(q_complex.imag)))
    if imag_defect > 1e-10:
        raise NumericalError(
            f"imaginary parts of 2 eps G + i did not cancel: {imag_defect:.3e}"
        )
    q_real = q_complex.real

    if not complex_path:
        block, _ = mn_block_generator(rc.X_R, rc.P_R, divergence_tol=sing_tol)
        return block

    evals, vecs = np.linalg.eig(q_real)
    if np.any(np.abs(evals - 1j) < sing_tol) or np.any(np.abs(evals + 1j) < sing_tol):
        raise ModularDivergence(
            "eigenvalues of 2 eps G + i within tolerance of +-i; arccot diverges",
            eigenvalues=np.abs(evals.imag) / 2.0,
        )
    arccot = (0.5 / 1j) * np.log((evals + 1j) / (evals - 1j))
    result = -2.0 * (vecs * arccot) @ np.linalg.inv(vecs)
    residual = float(np.max(np.abs(result.imag)))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(result.real)))):
        raise NumericalError(
            f"complex arccot path left imaginary residual {residual:.3e}"
        )
    return result.real


def complement_kernels(
    state: GaussianState,
    region: Region,
    sing_tol: float = DEFAULT_SING_TOL,
    clip: float | None = None,
) -> RegionKernels:
    """Kernels of the complement region.

    The full-space generator restricted to complement indices equals *minus*
    the returned ``L_block`` (the two invariant blocks of I ln Delta carry
    opposite signs).
    """
    comp = region.complement(state.n_sites)
    if len(comp) == 0:
        raise EmptyRegion("complement of the full region is empty")
    return mn_kernels(restrict_correlators(state, comp), sing_tol=sing_tol, clip=clip)


def entanglement_entropy(kernels) -> float:
    """Von Neumann entropy of the restricted Gaussian state.

    Accepts a :class:`RegionKernels` instance or a bare array of C
    eigenvalues.  The contribution of a mode is
    ``(c + 1/2) ln(c + 1/2) - (c - 1/2) ln(c - 1/2)``, continuously extended
    to zero at c = 1/2.
    """
    if isinstance(kernels, RegionKernels):
        c = np.asarray(kernels.c_spectrum, dtype=float)
    else:
        c = np.asarray(kernels, dtype=float)
    cp = c + 0.5
    cm = np.clip(c - 0.5, 0.0, None)
    plus = cp * np.log(cp)
    minus = np.where(cm > 0.0, cm * np.log(np.where(cm > 0.0, cm, 1.0)), 0.0)
    return float(np.sum(plus - minus))


def regularize_correlators(
    rc: RestrictedCorrelators, min_gap: float
) -> tuple[RestrictedCorrelators, tuple]:
    """Push the c-spectrum away from 1/2 by adjusting the momentum correlator.

    Keeps X_R and rebuilds P_R so that the spectrum of X_R P_R becomes
    ``max(c, 1/2 + min_gap)^2`` in the same mode basis.  The result is a
    valid restricted Gaussian state within ``O(min_gap)`` of the input.
    Returns the new correlators and the indices of the adjusted modes.
    """
    if min_gap <= 0:
        raise InvalidParameter(f"min_gap must be positive, got {min_gap!r}")
    c, basis, x_sqrt, x_inv_sqrt = product_spectrum(rc.X_R, rc.P_R)
    clipped = np.flatnonzero(c < 0.5 + min_gap)
    if clipped.size == 0:
        return rc, ()
    c_eff = np.maximum(c, 0.5 + min_gap)
    p_new = x_inv_sqrt @ ((basis * c_eff**2) @ basis.T) @ x_inv_sqrt
    out = RestrictedCorrelators(rc.region, rc.X_R, symmetrize(p_new))
    return out, tuple(int(i) for i in clipped)


def purify_restriction(rc: RestrictedCorrelators) -> tuple[GaussianState, Region]:
    """Embed a restricted state as the left half of a pure two-block state.

    Each mode of C with eigenvalue c is paired with an ancilla mode in a
    two-mode squeezed configuration, giving a pure Gaussian state on 2r
    sites whose restriction to the first r sites reproduces X_R and P_R
    exactly.  Returns the pure state and the embedded region.

    Modes must satisfy c >= 1/2; regularize first if the input contains
    machine-degenerate modes and downstream code needs a spectral gap.
    """
    c, basis, x_sqrt, x_inv_sqrt = product_spectrum(rc.X_R, rc.P_R)
    if np.any(c < 0.5 - POSITIVITY_TOL):
        raise PositivityViolation(
            f"cannot purify: min c = {c.min():.12f} below 1/2"
        )
    c = np.maximum(c, 0.5)
    r = rc.size
    squeeze = np.sqrt(c**2 - 0.25)

    # Mode transformation T diag(c) T^T = X_R with T = diag(c)^{1/2} W^T X^{-1/2}.
    t_mat = (np.sqrt(c)[:, None] * basis.T) @ x_inv_sqrt
    t_inv = x_sqrt @ (basis / np.sqrt(c))

    x_nf = np.block([
        [np.diag(c), np.diag(squeeze)],
        [np.diag(squeeze), np.diag(c)],
    ])
    p_nf = np.block([
        [np.diag(c), -np.diag(squeeze)],
        [-np.diag(squeeze), np.diag(c)],
    ])
    zero = np.zeros((r, r))
    eye = np.eye(r)
    s_x = np.block([[t_inv, zero], [zero, eye]])
    s_p = np.block([[t_mat.T, zero], [zero, eye]])
    x_big = symmetrize(s_x @ x_nf @ s_x.T)
    p_big = symmetrize(s_p @ p_nf @ s_p.T)
    return GaussianState.from_correlators(x_big, p_big), Region(range(r))
