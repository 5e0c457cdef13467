"""Dense linear algebra for small qudit systems.

States are unit-norm complex vectors, operators are dense Hermitian
matrices. Everything here is deliberately brute force and desk scale:
tensor products are built with explicit Kronecker products and the
symmetric-subspace projector is an explicit sum over all factor
permutations, behind a hard size cap. Global phase is ignored
throughout; states are compared only through squared fidelity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import DimensionError, ResourceCapError

# Hard cap on the dimension of any composite system (d ** n).
SIZE_CAP = 4096

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-10
PROB_TOL = 1e-12


class _MaximallyMixed:
    """Marker for a maximally mixed tensor factor (identity / d)."""

    def __repr__(self) -> str:
        return "MAXIMALLY_MIXED"


MAXIMALLY_MIXED = _MaximallyMixed()


def clamp_probability(p: float, tol: float = PROB_TOL) -> float:
    """Clip a computed probability to [0, 1].

    Values within ``tol`` outside the interval are treated as rounding
    noise; larger excursions indicate a bug and raise.
    """
    if p < -tol or p > 1.0 + tol:
        raise ValueError(f"value {p!r} is not a probability (tolerance {tol})")
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm complex amplitude vector of a d-dimensional pure state."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 1:
            raise DimensionError("amplitudes must be a non-empty 1-D sequence")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian operator; also used for projectors."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise DimensionError("operator matrix must be square and non-empty")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise ValueError(f"matrix is not Hermitian within {HERMITIAN_TOL}")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_projector(self, tol: float = PROJECTOR_TOL) -> bool:
        mat = self.matrix
        return bool(np.max(np.abs(mat @ mat - mat)) <= tol)

    @classmethod
    def from_state(cls, state: PureState) -> "HermitianOperator":
        """Rank-1 projector onto ``state``."""
        return cls(state.density_matrix())

    @classmethod
    def identity(cls, d: int) -> "HermitianOperator":
        if d < 1:
            raise DimensionError("identity needs dimension >= 1")
        return cls(np.eye(d, dtype=np.complex128))


@dataclass(frozen=True)
class MeasurementOutcome:
    """Result of a binary projective measurement."""

    index: int
    post_state: PureState


def haar_random(d: int, rng: np.random.Generator) -> PureState:
    """Draw a pure state uniformly (unitarily invariant measure).

    Samples a vector of independent standard complex Gaussians and
    normalizes it, which is exactly Haar on the unit sphere of C^d.
    """
    if d < 1:
        raise DimensionError(f"invalid dimension {d}")
    while True:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        norm = np.linalg.norm(z)
        if norm > 0.0:
            return PureState(z / norm)


def fidelity_sq(a: PureState, b: PureState) -> float:
    """Squared fidelity |<a|b>|^2 between pure states."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return clamp_probability(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def tensor_power(s: PureState, n: int) -> PureState:
    """n-fold tensor product of ``s`` with itself."""
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    if s.dim**n > SIZE_CAP:
        raise ResourceCapError(f"dimension {s.dim}**{n} exceeds cap {SIZE_CAP}")
    amps = reduce(np.kron, [s.amplitudes] * n)
    return PureState(amps)


def tensor_states(states: list[PureState] | tuple[PureState, ...]) -> PureState:
    """Tensor product of a sequence of pure states (left to right)."""
    if not states:
        raise ValueError("need at least one factor")
    total = 1
    for s in states:
        total *= s.dim
    if total > SIZE_CAP:
        raise ResourceCapError(f"composite dimension {total} exceeds cap {SIZE_CAP}")
    amps = reduce(np.kron, [s.amplitudes for s in states])
    return PureState(amps)


def sym_dim(n: int, d: int) -> int:
    """Dimension of the symmetric subspace of n qudits of dimension d.

    Equals C(n + d - 1, n), the number of multisets of size n drawn
    from d symbols.
    """
    if n < 0 or d < 1:
        raise DimensionError(f"invalid arguments n={n}, d={d}")
    return math.comb(n + d - 1, n)


@lru_cache(maxsize=None)
def sym_projector(n: int, d: int) -> HermitianOperator:
    """Projector onto the symmetric subspace of (C^d)^(tensor n).

    Built as the average of all n! factor-permutation operators.
    Hermitian, idempotent, with trace sym_dim(n, d).
    """
    if n < 1 or d < 1:
        raise DimensionError(f"invalid arguments n={n}, d={d}")
    dim = d**n
    if dim > SIZE_CAP:
        raise ResourceCapError(f"dimension {d}**{n} exceeds cap {SIZE_CAP}")
    # Row i of `digits` holds the base-d expansion of i, most significant first,
    # matching np.kron ordering.
    digits = np.array(list(itertools.product(range(d), repeat=n)), dtype=np.int64)
    powers = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    cols = np.arange(dim)
    acc = np.zeros((dim, dim))
    for perm in itertools.permutations(range(n)):
        rows = digits[:, perm] @ powers
        acc[rows, cols] += 1.0
    return HermitianOperator(acc / math.factorial(n))


def sym_outcome_probability(
    factors: list[PureState | _MaximallyMixed] | tuple[PureState | _MaximallyMixed, ...],
    d: int,
) -> float:
    """Probability of the symmetric outcome on a product of factors.

    Returns Tr(P rho) where P projects onto the symmetric subspace and
    rho is the tensor product of the given pure states and maximally
    mixed factors (identity / d). Every factor must have dimension d.
    """
    if not factors:
        raise ValueError("need at least one factor")
    n = len(factors)
    if d**n > SIZE_CAP:
        raise ResourceCapError(f"dimension {d}**{n} exceeds cap {SIZE_CAP}")
    mats = []
    for f in factors:
        if isinstance(f, _MaximallyMixed):
            mats.append(np.eye(d, dtype=np.complex128) / d)
        else:
            if f.dim != d:
                raise DimensionError(f"factor dimension {f.dim} != {d}")
            mats.append(f.density_matrix())
    rho = reduce(np.kron, mats)
    proj = sym_projector(n, d).matrix
    return clamp_probability(float(np.trace(proj @ rho).real))


def measure_binary(
    s: PureState, p: HermitianOperator, rng: np.random.Generator
) -> MeasurementOutcome:
    """Binary projective measurement {p, 1 - p} on ``s``.

    Outcome index 1 occurs with the Born probability <s|p|s>; the post
    state is the renormalized projection onto the obtained subspace.
    """
    if s.dim != p.dim:
        raise DimensionError(f"dimension mismatch: state {s.dim} vs operator {p.dim}")
    if not p.is_projector():
        raise ValueError("measurement operator is not a projector")
    projected = p.matrix @ s.amplitudes
    prob_one = clamp_probability(float(np.vdot(s.amplitudes, projected).real))
    if rng.random() < prob_one:
        return MeasurementOutcome(1, PureState(projected / np.linalg.norm(projected)))
    residual = s.amplitudes - projected
    return MeasurementOutcome(0, PureState(residual / np.linalg.norm(residual)))


def measure_basis(s: PureState, rng: np.random.Generator) -> int:
    """Complete measurement in the computational basis; returns the index."""
    probs = np.abs(s.amplitudes) ** 2
    cumulative = np.cumsum(probs)
    # Norm is 1 within tolerance; guard the top edge anyway.
    u = rng.random() * cumulative[-1]
    return int(np.searchsorted(cumulative, u, side="right").clip(0, s.dim - 1))
