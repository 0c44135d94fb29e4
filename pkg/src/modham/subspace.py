"""Standard subspaces and full-space modular data.

For a region R of the chain, initial data supported in R spans a real-linear
subspace L of the 2n-dimensional phase space.  The cutting projection P
multiplies by the characteristic function of R on both the field and
momentum blocks; it is idempotent but not orthogonal for the metric mu, and
its mu-adjoint is ``-I P I``.

The central operator is ``A = 1 - P + I P I``.  It is mu-self-adjoint, its
mu-spectrum avoids the open interval (-1, 1), and the modular operator of
the subspace satisfies ``Delta = (A - 1)^{-1} (A + 1)`` together with
``ln Delta = 2 arcoth(A)``, understood through spectral calculus in the
Gram-symmetrized frame.

Lattice caveat: for a region of fewer than half the sites, L + I L is a
proper subspace of phase space (the lattice complex structure is not
anti-local).  The modular objects are constructed on H_L = L + I L and
extended by ``Delta = 1`` on its mu-orthogonal complement; those trivial
directions correspond to unentangled complement modes and are counted in
the standardness report.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from ._linalg import (
    SymmetrizedFrame,
    adaptive_matrix_quadrature,
    frob,
    rel_diff,
    symmetrize,
)
from .errors import (
    ConditioningWarning,
    DecompositionSingular,
    EmptyRegion,
    InvalidParameter,
    ModularDivergence,
    NotMuSelfAdjoint,
    NotStandard,
    NumericalError,
    SpectrumOutOfDomain,
)
from .kernels import mn_block_generator
from .lattice import GaussianState
from .regions import (
    CuttingProjection,
    Region,
    cutting_projection,
    phase_space_indices,
    region_mask,
    validate_region,
)

__all__ = [
    "Region",
    "CuttingProjection",
    "StandardnessReport",
    "ModularData",
    "QuadratureResult",
    "cutting_projection",
    "mu_adjoint",
    "mu_spectral_function",
    "standardness_check",
    "modular_data_full",
    "lndelta_resolvent_quadrature",
    "lndelta_arccot_split",
]

MU_SELFADJOINT_TOL = 1e-8
STANDARD_EIG_TOL = 1e-9
RANK_TOL = 1e-10
CONSISTENCY_TOL = 1e-8
GRAM_COND_WARN = 1e12


@dataclass(frozen=True)
class StandardnessReport:
    min_abs_eigenvalue: float
    is_standard: bool
    is_separating: bool
    trivial_dim: int


@dataclass(frozen=True)
class ModularData:
    """Full-space modular objects of a standard region.

    ``S_op`` and ``J_op`` represent the antilinear Tomita operator and
    modular conjugation as real matrices anticommuting with the complex
    structure.  ``projector`` is the mu-orthogonal projector onto
    H_L = L + I L; ``trivial_dim`` counts the directions where Delta is
    extended by 1.
    """

    region: Region
    A: np.ndarray = field(repr=False)
    lnDelta: np.ndarray = field(repr=False)
    Delta: np.ndarray = field(repr=False)
    S_op: np.ndarray = field(repr=False)
    J_op: np.ndarray = field(repr=False)
    projector: np.ndarray = field(repr=False)
    trivial_dim: int = 0
    consistency_residual: float = 0.0


@dataclass(frozen=True)
class QuadratureResult:
    """ln Delta estimate from the resolvent integral with its error bound."""

    lnDelta: np.ndarray = field(repr=False)
    error_bound: float = 0.0
    n_evals: int = 0


def mu_adjoint(state: GaussianState, a_mat: np.ndarray) -> np.ndarray:
    """Adjoint for the metric mu: ``Gram^{-1} A^T Gram``.

    A :class:`ConditioningWarning` is emitted when the Gram matrix condition
    number exceeds 1e12; the result is still returned.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    if a_mat.shape != state.mu_gram.shape:
        raise NumericalError(
            f"operator shape {a_mat.shape} does not match phase space "
            f"{state.mu_gram.shape}"
        )
    w = np.linalg.eigvalsh(symmetrize(state.mu_gram))
    cond = w.max() / w.min()
    if cond > GRAM_COND_WARN:
        warnings.warn(
            f"Gram matrix condition number {cond:.3e} exceeds {GRAM_COND_WARN:g}; "
            f"mu-adjoint accuracy is degraded",
            ConditioningWarning,
            stacklevel=2,
        )
    return np.linalg.solve(state.mu_gram, a_mat.T @ state.mu_gram)


def mu_spectral_function(
    state: GaussianState,
    a_mat: np.ndarray,
    fn: Callable[[np.ndarray], np.ndarray],
    spectral_domain: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Apply a scalar function to a mu-self-adjoint operator.

    The operator is conjugated with Gram^{1/2} (making it symmetric),
    eigendecomposed, mapped through ``fn`` and conjugated back, so the
    result is again mu-self-adjoint.

    Parameters
    ----------
    fn : callable
        Vectorized scalar function applied to the eigenvalue array.
    spectral_domain : callable, optional
        Predicate returning a boolean mask of admissible eigenvalues; any
        inadmissible eigenvalue raises :class:`SpectrumOutOfDomain`.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    gram = state.mu_gram
    defect = frob(gram @ a_mat - a_mat.T @ gram)
    bound = MU_SELFADJOINT_TOL * max(frob(a_mat) * frob(gram), 1e-300)
    if defect > bound:
        raise NotMuSelfAdjoint(
            f"operator is not mu-self-adjoint: ||Gram A - A^T Gram|| = "
            f"{defect:.3e} > {bound:.3e}"
        )
    frame = SymmetrizedFrame(gram)
    sym = symmetrize(frame.to_frame(a_mat))
    eigs, vecs = np.linalg.eigh(sym)
    if spectral_domain is not None:
        ok = np.asarray(spectral_domain(eigs), dtype=bool)
        if not ok.all():
            bad = eigs[~ok]
            raise SpectrumOutOfDomain(
                f"{bad.size} eigenvalue(s) outside the domain of the spectral "
                f"function: {bad}",
                eigenvalues=bad,
            )
    mapped = (vecs * fn(eigs)) @ vecs.T
    return frame.from_frame(mapped)


class _SubspaceFrame:
    """Shared symmetrized-frame data for one (state, region) pair."""

    def __init__(self, state: GaussianState, region: Region):
        validate_region(region, state.n_sites)
        self.state = state
        self.region = region
        n = state.n_sites
        self.mask = region_mask(region, n)
        self.frame = SymmetrizedFrame(state.mu_gram)

        i_mat = state.I_mat
        p_cut = np.diag(self.mask.astype(float))
        self.A = np.eye(2 * n) - p_cut + i_mat @ p_cut @ i_mat
        self.A_sym = symmetrize(self.frame.to_frame(self.A))

        cols = np.flatnonzero(self.mask)
        basis = np.eye(2 * n)[:, cols]
        self.w_cols = np.hstack([basis, i_mat @ basis])
        wt = self.frame.sqrt @ self.w_cols
        u_svd, s_svd, vt_svd = np.linalg.svd(wt, full_matrices=True)
        self._svd = (u_svd, s_svd, vt_svd)
        self.sing_vals = s_svd
        smax = float(s_svd[0]) if s_svd.size else 0.0
        self.rank_ratio = float(s_svd[-1] / smax) if smax > 0 else 0.0
        k = wt.shape[1]
        self.separating = k <= 2 * n and self.rank_ratio > RANK_TOL
        rank = k if self.separating else int(np.sum(s_svd > RANK_TOL * smax))
        self.q_basis = u_svd[:, :rank]
        self.trivial_basis = u_svd[:, rank:]

    @property
    def trivial_dim(self) -> int:
        return self.trivial_basis.shape[1]

    def restricted_spectrum(self):
        """Eigen-data of A on H_L in the symmetrized frame."""
        a_hl = symmetrize(self.q_basis.T @ self.A_sym @ self.q_basis)
        eigs, vecs = np.linalg.eigh(a_hl)
        return a_hl, eigs, vecs


def standardness_check(state: GaussianState, region: Region) -> StandardnessReport:
    """Numerical standardness of a region.

    A region is reported standard when the mu-spectrum of ``1 - P + I P I``
    stays outside (-1 + 1e-9, 1 - 1e-9), the region is a proper non-empty
    subset of the lattice, and the decomposition system [P | I P] has full
    column rank (the subspace is separating, which rules out regions
    covering more than half of a pure chain).
    """
    n = state.n_sites
    if len(region) == 0:
        return StandardnessReport(1.0, False, True, 2 * n)
    validate_region(region, n)
    if len(region) >= n:
        return StandardnessReport(1.0, False, False, 0)
    sub = _SubspaceFrame(state, region)
    eigs = np.linalg.eigvalsh(sub.A_sym)
    min_abs = float(np.min(np.abs(eigs)))
    ok = min_abs >= 1.0 - STANDARD_EIG_TOL and sub.separating
    return StandardnessReport(min_abs, ok, sub.separating, sub.trivial_dim)


def _require_standard(state: GaussianState, region: Region) -> _SubspaceFrame:
    n = state.n_sites
    if len(region) == 0:
        raise NotStandard("empty region has no standard subspace")
    if len(region) >= n:
        raise NotStandard(
            "region covers the full lattice; Delta = 1 and the projector "
            "encoding 1 - P + I P I is degenerate"
        )
    sub = _SubspaceFrame(state, region)
    if not sub.separating:
        raise NotStandard(
            f"subspace is not separating (relative rank of [P | I P] system "
            f"{sub.rank_ratio:.3e}); regions larger than half of a pure chain "
            f"are never separating"
        )
    eigs = np.linalg.eigvalsh(sub.A_sym)
    if np.min(np.abs(eigs)) < 1.0 - STANDARD_EIG_TOL:
        raise NotStandard(
            f"mu-spectrum of 1 - P + I P I enters the forbidden gap: "
            f"min |eig| = {np.min(np.abs(eigs)):.12f}"
        )
    return sub


def modular_data_full(state: GaussianState, region: Region) -> ModularData:
    """Construct S, J, Delta and ln Delta for a standard region.

    ``ln Delta`` is the spectral function ``2 arcoth`` of the restriction of
    ``A = 1 - P + I P I`` to H_L = L + I L, extended by zero on the trivial
    directions.  ``Delta`` is assembled from the independent block solve
    ``(A - 1)^{-1} (A + 1)`` and cross-checked against ``exp(ln Delta)``.

    Raises
    ------
    NotStandard
        If the region fails :func:`standardness_check`.
    SpectrumOutOfDomain
        If eigenvalues of A on H_L reach [-1, 1]; this happens when region
        modes are unentangled to machine precision.  Regularize the
        restricted state and purify (see :mod:`modham.kernels`) instead of
        clipping here.
    DecompositionSingular
        If the h = f + I g decomposition system is rank deficient.
    """
    sub = _require_standard(state, region)
    n = state.n_sites

    a_hl, eigs, vecs = sub.restricted_spectrum()
    inside = np.abs(eigs) <= 1.0
    if inside.any():
        raise SpectrumOutOfDomain(
            f"{int(inside.sum())} eigenvalue(s) of A on L + IL inside [-1, 1]; "
            f"the modular generator is not representable for this region "
            f"(nearly unentangled modes)",
            eigenvalues=eigs[inside],
        )

    q = sub.q_basis
    ln_hl = (vecs * (2.0 * np.arctanh(1.0 / eigs))) @ vecs.T
    ln_delta = sub.frame.from_frame(q @ ln_hl @ q.T)

    eye_hl = np.eye(q.shape[1])
    delta_hl = np.linalg.solve(a_hl - eye_hl, a_hl + eye_hl)
    proj_sym = q @ q.T
    delta_sym = q @ delta_hl @ q.T + (np.eye(2 * n) - proj_sym)
    delta = sub.frame.from_frame(delta_sym)

    consistency = rel_diff(scipy.linalg.expm(ln_delta), delta)
    if consistency > CONSISTENCY_TOL:
        raise NumericalError(
            f"exp(ln Delta) disagrees with (A-1)^(-1)(A+1): relative "
            f"residual {consistency:.3e}"
        )

    s_op = _tomita_operator(sub)
    # Delta^{-1/2} assembled from the A eigenbasis: the eigenproblem of A is
    # well conditioned even when Delta's spectrum spans many decades, while
    # re-diagonalizing Delta itself loses the small eigenvalues.
    inv_sqrt_vals = np.sqrt((eigs - 1.0) / (eigs + 1.0))
    inv_sqrt_sym = q @ ((vecs * inv_sqrt_vals) @ vecs.T) @ q.T
    inv_sqrt_sym += np.eye(2 * n) - proj_sym
    j_op = s_op @ sub.frame.from_frame(inv_sqrt_sym)
    projector = sub.frame.from_frame(proj_sym)

    return ModularData(
        region=region,
        A=sub.A,
        lnDelta=ln_delta,
        Delta=delta,
        S_op=s_op,
        J_op=j_op,
        projector=projector,
        trivial_dim=sub.trivial_dim,
        consistency_residual=consistency,
    )


def _tomita_operator(sub: _SubspaceFrame) -> np.ndarray:
    """Solve h = f + I g columnwise and assemble S: f + I g -> f - I g.

    On the trivial directions S acts as conjugation along a deterministically
    chosen mu-orthonormal basis {u, I u}, which keeps S^2 = 1 and the
    anticommutation with I exact there.
    """
    u_svd, s_svd, vt_svd = sub._svd
    k = sub.w_cols.shape[1]
    if sub.rank_ratio <= RANK_TOL:
        raise DecompositionSingular(
            f"[P | I P] decomposition system rank-deficient: relative "
            f"smallest singular value {sub.rank_ratio:.3e} <= {RANK_TOL:g}"
        )
    # Least-squares coefficients in the symmetrized frame: coef = V S^{-1} U^T.
    coef = (vt_svd.T[:, :k] / s_svd) @ u_svd[:, :k].T
    signs = np.concatenate([np.ones(k // 2), -np.ones(k // 2)])
    w_signed = sub.w_cols * signs
    s_main = (sub.frame.sqrt @ w_signed) @ coef

    if sub.trivial_dim:
        i_sym = sub.frame.to_frame(sub.state.I_mat)
        s_main = s_main + _trivial_conjugation(sub.trivial_basis, i_sym)
    return sub.frame.inv_sqrt @ s_main @ sub.frame.sqrt


def _trivial_conjugation(basis: np.ndarray, i_sym: np.ndarray) -> np.ndarray:
    """Conjugation u -> u, I u -> -I u on the span of an I-invariant basis.

    Pairs each chosen direction u with I u (both inside the trivial space,
    which is I-invariant), removes the pair from the working basis by an
    SVD that discards the rank lost to the projection, and accumulates the
    reflection u u^T - (I u)(I u)^T.
    """
    remaining = basis.copy()
    out = np.zeros((basis.shape[0], basis.shape[0]))
    while remaining.shape[1]:
        u = remaining[:, 0]
        u = u / np.linalg.norm(u)
        v = i_sym @ u
        v = v - u * (u @ v)
        v = v / np.linalg.norm(v)
        out += np.outer(u, u) - np.outer(v, v)
        rest = remaining[:, 1:]
        if rest.shape[1] == 0:
            break
        rest = rest - np.outer(u, u @ rest) - np.outer(v, v @ rest)
        left, sing, _ = np.linalg.svd(rest, full_matrices=False)
        remaining = left[:, sing > 0.5]
    return out


def lndelta_resolvent_quadrature(
    state: GaussianState,
    region: Region,
    quad_tol: float = 1e-10,
    max_evals: int = 200_000,
) -> QuadratureResult:
    """ln Delta from the resolvent integral, no spectral calculus involved.

    Integrates ``2 A (A^2 - s^2)^{-1}`` over s in (0, 1] (the substitution
    t = 1/s of the arcoth resolvent integral over t in [1, inf)) using
    adaptive Gauss-Kronrod panels and dense linear solves.  The integrand is
    projected onto H_L, which is exact because both H_L and its
    mu-orthogonal complement are invariant under A.

    Raises :class:`QuadratureNotConverged` when the error bound cannot be
    pushed below ``quad_tol`` within ``max_evals`` integrand evaluations;
    regions with machine-degenerate modes stall this way.
    """
    if quad_tol <= 0:
        raise InvalidParameter(f"quad_tol must be positive, got {quad_tol!r}")
    sub = _require_standard(state, region)
    n = state.n_sites
    a_sym = sub.A_sym
    a_sq = symmetrize(a_sym @ a_sym)
    proj = sub.q_basis @ sub.q_basis.T
    numerator = proj @ a_sym @ proj
    eye = np.eye(2 * n)

    def integrand(s: float) -> np.ndarray:
        return proj @ np.linalg.solve(a_sq - s * s * eye, 2.0 * numerator)

    integral, err, n_evals = adaptive_matrix_quadrature(
        integrand, 0.0, 1.0, abs_tol=quad_tol, max_evals=max_evals
    )
    ln_delta = sub.frame.from_frame(integral)
    return QuadratureResult(ln_delta, err, n_evals)


def lndelta_arccot_split(
    state: GaussianState,
    region: Region,
    trivial_tol: float = 1e-9,
) -> np.ndarray:
    """I ln Delta assembled from the two invariant subspace blocks.

    The generator splits into an arccot of the complex structure cut to the
    region (giving the region block) minus the same construction on the
    complement (giving the complement block); both blocks are evaluated by
    spectral calculus on the restricted correlators.  Complement modes that
    are unentangled within ``trivial_tol`` carry ln Delta = 0 and are mapped
    accordingly; unentangled *region* modes raise
    :class:`ModularDivergence`.

    Returns the full 2n x 2n matrix equal to ``I_mat @ lnDelta`` of
    :func:`modular_data_full`.
    """
    _require_standard(state, region)
    n = state.n_sites
    out = np.zeros((2 * n, 2 * n))

    x_r, p_r = _restricted_pair(state, region)
    block_r, c_region = mn_block_generator(x_r, p_r)
    if np.any(c_region - 0.5 <= trivial_tol):
        bad = c_region[c_region - 0.5 <= trivial_tol]
        raise ModularDivergence(
            f"{bad.size} region mode(s) within {trivial_tol:g} of c = 1/2; "
            f"the region block of I ln Delta diverges",
            eigenvalues=bad,
        )
    sel_r = phase_space_indices(region, n)
    out[np.ix_(sel_r, sel_r)] = block_r

    comp = region.complement(n)
    x_c, p_c = _restricted_pair(state, comp)
    block_c, _ = mn_block_generator(x_c, p_c, zero_below=0.5 + trivial_tol)
    sel_c = phase_space_indices(comp, n)
    out[np.ix_(sel_c, sel_c)] = -block_c
    return out


def _restricted_pair(state: GaussianState, region: Region):
    idx = region.indices()
    if idx.size == 0:
        raise EmptyRegion("cannot restrict correlators to an empty region")
    grid = np.ix_(idx, idx)
    return state.X_full[grid], state.P_full[grid]
