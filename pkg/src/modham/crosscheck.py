"""Three-route agreement checks for the region-restricted generator.

Route (a) is full-space spectral calculus (``2 arcoth`` of ``1 - P + IPI``),
route (b) the M/N block formula on the restricted correlators, route (c)
the adaptive resolvent quadrature.  All three must produce the same region
block of ``I ln Delta``.  The subspace-split and two-point-kernel variants
are included as supplementary residuals.

Regions whose restricted spectrum touches c = 1/2 at double precision have
no representable generator; for those, :func:`regularized_instance` clips
the spectrum by an explicit gap, purifies the result onto a doubled region,
and the routes are compared raw on that nearby instance.  The clip strength
is always reported, never implicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import frob
from .kernels import (
    lndelta_region_via_G,
    mn_kernels,
    purify_restriction,
    regularize_correlators,
    restrict_correlators,
    symplectic_spectrum,
)
from .lattice import GaussianState
from .regions import Region, phase_space_indices
from .subspace import (
    lndelta_arccot_split,
    lndelta_resolvent_quadrature,
    modular_data_full,
)


@dataclass(frozen=True)
class RouteAgreement:
    """Pairwise relative residuals between the generator routes."""

    region: Region
    norm: float
    spectral_vs_blocks: float
    spectral_vs_quadrature: float
    blocks_vs_quadrature: float
    split_vs_spectral: float
    kernel_vs_blocks: float
    quad_error_bound: float
    quad_evals: int

    @property
    def max_residual(self) -> float:
        return max(
            self.spectral_vs_blocks,
            self.spectral_vs_quadrature,
            self.blocks_vs_quadrature,
            self.split_vs_spectral,
            self.kernel_vs_blocks,
        )


def region_block(full_matrix: np.ndarray, region: Region, n_sites: int) -> np.ndarray:
    """Extract the 2r x 2r region block of a phase-space operator."""
    sel = phase_space_indices(region, n_sites)
    return full_matrix[np.ix_(sel, sel)]


def minimal_gap(state: GaussianState, region: Region) -> float:
    """Smallest distance of the restricted spectrum from c = 1/2."""
    c = symplectic_spectrum(restrict_correlators(state, region))
    return float(np.min(c) - 0.5)


def regularized_instance(
    state: GaussianState, region: Region, clip: float
) -> tuple[GaussianState, Region, tuple]:
    """Clip the restricted spectrum and purify onto a doubled region.

    Returns ``(pure_state, embedded_region, clipped_modes)``.  The embedded
    region occupies the first half of the purified lattice, so every
    full-space route applies without trivial directions and with a spectral
    gap of at least ``clip``.
    """
    rc = restrict_correlators(state, region)
    rc_reg, clipped = regularize_correlators(rc, clip)
    pure_state, embedded = purify_restriction(rc_reg)
    return pure_state, embedded, clipped


def route_agreement(
    state: GaussianState,
    region: Region,
    quad_tol: float = 1e-10,
    sing_tol: float = 1e-10,
) -> RouteAgreement:
    """Compute the generator along every route and compare pairwise.

    All routes run without clipping; callers facing degenerate regions
    should first map the instance through :func:`regularized_instance`.
    """
    n = state.n_sites
    rc = restrict_correlators(state, region)

    data = modular_data_full(state, region)
    gen_spectral = region_block(state.I_mat @ data.lnDelta, region, n)

    kernels = mn_kernels(rc, sing_tol=sing_tol)
    gen_blocks = kernels.L_block

    quad = lndelta_resolvent_quadrature(state, region, quad_tol=quad_tol)
    gen_quad = region_block(state.I_mat @ quad.lnDelta, region, n)

    split_full = lndelta_arccot_split(state, region)
    gen_kernel_form = lndelta_region_via_G(rc, sing_tol=sing_tol)

    norm = frob(gen_blocks)
    return RouteAgreement(
        region=region,
        norm=norm,
        spectral_vs_blocks=frob(gen_spectral - gen_blocks) / norm,
        spectral_vs_quadrature=frob(gen_spectral - gen_quad) / norm,
        blocks_vs_quadrature=frob(gen_blocks - gen_quad) / norm,
        split_vs_spectral=frob(split_full - state.I_mat @ data.lnDelta)
        / max(frob(split_full), 1e-300),
        kernel_vs_blocks=frob(gen_kernel_form - gen_blocks) / norm,
        quad_error_bound=quad.error_bound,
        quad_evals=quad.n_evals,
    )
