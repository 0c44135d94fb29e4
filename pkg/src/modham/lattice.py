"""Harmonic chains and their Gaussian vacuum data.

A chain of ``n`` sites carries the quadratic Hamiltonian
``H = (1/2) sum pi_x^2 + (1/2) phi^T V phi`` with dynamical matrix
``V = mass^2 * 1 + coupling * Laplacian``.  The lattice spacing is fixed to
one, so sums over sites need no measure factors.

Phase-space conventions used throughout the package:

- initial data is a pair ``f = (f1, f2)`` of real n-vectors (field and
  conjugate momentum), stacked as ``[phi-block, pi-block]`` in every
  2n-dimensional object;
- the symplectic form is ``sigma(f, g) = (1/2) (f1 . g2 - g1 . f2)``, i.e.
  ``sigma = (1/2) f^T eps g`` with ``eps = [[0, 1], [-1, 0]]``;
- the vacuum correlators are ``X = <phi phi> = (1/2) V^{-1/2}`` and
  ``P = <pi pi> = (1/2) V^{1/2}``, so purity reads ``4 X P = 1``;
- the complex structure is the unique real matrix with
  ``eps I = 2 diag(X, P)``, explicitly ``I = [[0, -2P], [2X, 0]]``;
- the metric ``mu(f, g) = (1/2) f^T eps I g`` has Gram matrix ``diag(X, P)``.

Only pure states with vanishing symmetric phi-pi cross correlations are
supported.  Mixed states are reached by restricting a pure state on a larger
lattice; see :func:`modham.kernels.purify_restriction`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._linalg import EIG_CLAMP, frob, spd_sqrt_pair, symmetrize
from .errors import (
    DimensionMismatch,
    InvalidParameter,
    NumericalError,
    ZeroModeError,
)

INVARIANT_TOL = 1e-10


class Boundary(str, enum.Enum):
    """Boundary condition of the discrete Laplacian."""

    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeModel:
    """A discretized free scalar on a 1D chain.

    Attributes
    ----------
    n_sites : int
        Number of lattice sites.
    mass : float
        Field mass in lattice units (non-negative).
    coupling : float
        Nearest-neighbour spring constant (positive).
    boundary : Boundary
        Dirichlet or periodic chain ends.
    dynamical_matrix : ndarray
        The SPD matrix ``V = mass^2 * 1 + coupling * Laplacian``.
    """

    n_sites: int
    mass: float
    coupling: float
    boundary: Boundary
    dynamical_matrix: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PhaseSpaceVector:
    """Initial data ``(f1, f2)`` for the field and its conjugate momentum."""

    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        f1 = np.asarray(self.f1, dtype=float)
        f2 = np.asarray(self.f2, dtype=float)
        if f1.ndim != 1 or f2.ndim != 1 or f1.shape != f2.shape:
            raise DimensionMismatch(
                f"f1 and f2 must be equal-length 1D vectors, got shapes "
                f"{np.shape(self.f1)} and {np.shape(self.f2)}"
            )
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)

    @property
    def n_sites(self) -> int:
        return self.f1.shape[0]

    def stacked(self) -> np.ndarray:
        """The 2n-vector [phi-block, pi-block]."""
        return np.concatenate([self.f1, self.f2])


@dataclass(frozen=True)
class GaussianState:
    """Pure Gaussian state data on the full lattice.

    Holds the correlators together with the symplectic matrix, the complex
    structure and the Gram matrix of the metric ``mu``.  All arrays are
    treated as immutable after construction.
    """

    n_sites: int
    X_full: np.ndarray = field(repr=False)
    P_full: np.ndarray = field(repr=False)
    I_mat: np.ndarray = field(repr=False)
    epsilon: np.ndarray = field(repr=False)
    mu_gram: np.ndarray = field(repr=False)

    @classmethod
    def from_correlators(
        cls, x_full: np.ndarray, p_full: np.ndarray, validate: bool = True
    ) -> "GaussianState":
        """Build the state data from correlators of a pure state.

        Parameters
        ----------
        x_full, p_full : ndarray
            Symmetric positive-definite field and momentum correlators
            satisfying the purity condition ``4 X P = 1``.
        validate : bool
            Check the structural invariants (purity, ``I^2 = -1``,
            positive-definite Gram) to tolerance 1e-10.
        """
        x_full = np.asarray(x_full, dtype=float)
        p_full = np.asarray(p_full, dtype=float)
        n = x_full.shape[0]
        if x_full.shape != (n, n) or p_full.shape != (n, n):
            raise DimensionMismatch("correlators must be square and equal-sized")

        eye_n = np.eye(n)
        eps = np.zeros((2 * n, 2 * n))
        eps[:n, n:] = eye_n
        eps[n:, :n] = -eye_n

        i_mat = np.zeros((2 * n, 2 * n))
        i_mat[:n, n:] = -2.0 * p_full
        i_mat[n:, :n] = 2.0 * x_full

        gram = np.zeros((2 * n, 2 * n))
        gram[:n, :n] = x_full
        gram[n:, n:] = p_full

        state = cls(n, x_full, p_full, i_mat, eps, gram)
        if validate:
            state._validate()
        return state

    def _validate(self):
        n = self.n_sites
        scale = max(1.0, frob(self.X_full) * frob(self.P_full))
        purity = frob(4.0 * self.X_full @ self.P_full - np.eye(n)) / scale
        if purity > INVARIANT_TOL:
            raise InvalidParameter(
                f"state is not pure: ||4 X P - 1|| = {purity:.3e} "
                f"(only pure states are supported; restrict a purification "
                f"for mixed states)"
            )
        isq = frob(self.I_mat @ self.I_mat + np.eye(2 * n)) / max(
            1.0, frob(self.I_mat) ** 2
        )
        if isq > INVARIANT_TOL:
            raise NumericalError(f"complex structure failed I^2 = -1: {isq:.3e}")
        w = np.linalg.eigvalsh(symmetrize(self.mu_gram))
        if w.min() <= EIG_CLAMP:
            raise NumericalError(
                f"mu Gram matrix not positive definite (min eig {w.min():.3e})"
            )

    def two_point_function(self) -> np.ndarray:
        """The complex 2n x 2n kernel G = [[X, i/2], [-i/2, P]]."""
        n = self.n_sites
        g = np.zeros((2 * n, 2 * n), dtype=complex)
        g[:n, :n] = self.X_full
        g[n:, n:] = self.P_full
        g[:n, n:] = 0.5j * np.eye(n)
        g[n:, :n] = -0.5j * np.eye(n)
        return g


def _laplacian(n_sites: int, boundary: Boundary) -> np.ndarray:
    lap = 2.0 * np.eye(n_sites)
    lap -= np.eye(n_sites, k=1)
    lap -= np.eye(n_sites, k=-1)
    if boundary is Boundary.PERIODIC:
        # Wrap-around couplings; for n <= 2 they fold onto existing entries.
        lap[0, (n_sites - 1) % n_sites] -= 1.0
        lap[(n_sites - 1) % n_sites, 0] -= 1.0
    return lap


def build_harmonic_chain(
    n_sites: int,
    mass: float,
    coupling: float = 1.0,
    boundary: Boundary | str = Boundary.DIRICHLET,
) -> LatticeModel:
    """Construct a harmonic chain model.

    Parameters
    ----------
    n_sites : int
        Number of sites, at least 1.
    mass : float
        Field mass, non-negative.
    coupling : float
        Nearest-neighbour coupling, strictly positive.
    boundary : Boundary or str
        ``"dirichlet"`` or ``"periodic"``.

    Raises
    ------
    InvalidParameter
        For non-positive coupling, negative mass, or ``n_sites < 1``.
    ZeroModeError
        If the dynamical matrix is singular, e.g. a periodic massless chain.
    """
    if not isinstance(n_sites, (int, np.integer)) or n_sites < 1:
        raise InvalidParameter(f"n_sites must be a positive integer, got {n_sites!r}")
    if coupling <= 0.0:
        raise InvalidParameter(f"coupling must be positive, got {coupling!r}")
    if mass < 0.0:
        raise InvalidParameter(f"mass must be non-negative, got {mass!r}")
    boundary = Boundary(boundary)

    v = mass**2 * np.eye(n_sites) + coupling * _laplacian(n_sites, boundary)
    eigs = np.linalg.eigvalsh(v)
    if eigs.min() <= EIG_CLAMP:
        raise ZeroModeError(
            f"dynamical matrix has a zero mode (min eigenvalue "
            f"{eigs.min():.3e}); massless periodic chains are not supported"
        )
    v.flags.writeable = False
    return LatticeModel(int(n_sites), float(mass), float(coupling), boundary, v)


def vacuum_state(model: LatticeModel) -> GaussianState:
    """Gaussian vacuum of a chain: ``X = V^{-1/2}/2``, ``P = V^{1/2}/2``."""
    try:
        v_sqrt, v_inv_sqrt = spd_sqrt_pair(model.dynamical_matrix, "dynamical matrix")
    except NumericalError as exc:
        raise NumericalError(f"vacuum construction failed: {exc}") from exc
    x_full = symmetrize(0.5 * v_inv_sqrt)
    p_full = symmetrize(0.5 * v_sqrt)
    return GaussianState.from_correlators(x_full, p_full)


def _check_vector(state: GaussianState, vec: PhaseSpaceVector, name: str):
    if vec.n_sites != state.n_sites:
        raise DimensionMismatch(
            f"{name} has {vec.n_sites} sites, state has {state.n_sites}"
        )


def symplectic_product(
    state: GaussianState, f: PhaseSpaceVector, g: PhaseSpaceVector
) -> float:
    """Antisymmetric form ``sigma(f, g) = (1/2) sum (f1 g2 - g1 f2)``."""
    _check_vector(state, f, "f")
    _check_vector(state, g, "g")
    return 0.5 * float(f.f1 @ g.f2 - g.f1 @ f.f2)


def mu_product(
    state: GaussianState, f: PhaseSpaceVector, g: PhaseSpaceVector
) -> float:
    """Symmetric positive form ``mu(f, g) = f^T diag(X, P) g``."""
    _check_vector(state, f, "f")
    _check_vector(state, g, "g")
    return float(f.stacked() @ state.mu_gram @ g.stacked())
