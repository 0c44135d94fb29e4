"""Region geometry on the chain and the cutting projection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import IndexOutOfRange, InvalidParameter


@dataclass(frozen=True)
class Region:
    """A sorted set of site indices defining the standard subspace."""

    sites: tuple

    def __init__(self, sites: Iterable[int]):
        sites = tuple(int(s) for s in sites)
        if any(s < 0 for s in sites):
            raise InvalidParameter(f"negative site index in region: {sites}")
        if len(set(sites)) != len(sites):
            raise InvalidParameter(f"duplicate site indices in region: {sites}")
        object.__setattr__(self, "sites", tuple(sorted(sites)))

    def __len__(self) -> int:
        return len(self.sites)

    @classmethod
    def interval(cls, start: int, length: int) -> "Region":
        if length < 0:
            raise InvalidParameter(f"interval length must be non-negative: {length}")
        return cls(range(start, start + length))

    @classmethod
    def half(cls, n_sites: int) -> "Region":
        return cls(range(n_sites // 2))

    def complement(self, n_sites: int) -> "Region":
        inside = set(self.sites)
        return Region(s for s in range(n_sites) if s not in inside)

    def indices(self) -> np.ndarray:
        return np.asarray(self.sites, dtype=int)


@dataclass(frozen=True)
class CuttingProjection:
    """Characteristic-function projection of a region on both blocks.

    Idempotent but not mu-orthogonal; its mu-adjoint is ``-I P I``.
    """

    n_sites: int
    diag_mask: np.ndarray = field(repr=False)


def validate_region(region: Region, n_sites: int):
    if len(region) and region.sites[-1] >= n_sites:
        raise IndexOutOfRange(
            f"region site {region.sites[-1]} outside lattice of {n_sites} sites"
        )


def region_mask(region: Region, n_sites: int) -> np.ndarray:
    """Boolean 2n mask selecting the region on both phase-space blocks."""
    validate_region(region, n_sites)
    site_mask = np.zeros(n_sites, dtype=bool)
    site_mask[region.indices()] = True
    return np.concatenate([site_mask, site_mask])


def phase_space_indices(region: Region, n_sites: int) -> np.ndarray:
    """Row indices of the region inside 2n-dimensional phase space."""
    validate_region(region, n_sites)
    idx = region.indices()
    return np.concatenate([idx, n_sites + idx])


def cutting_projection(region: Region, n_sites: int) -> CuttingProjection:
    """Diagonal 0/1 matrix multiplying by the region's characteristic function."""
    mask = region_mask(region, n_sites)
    return CuttingProjection(n_sites, np.diag(mask.astype(float)))
