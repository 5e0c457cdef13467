"""Pluggable honest and adversarial behaviors for Alice and Bob.

Each strategy is a stateless factory; all per-run randomness comes
from the run's generator and any per-run knowledge (the true state, a
subspace known to contain it) is bound by the protocol engine through
the stage contexts below. ``alice_act`` and ``bob_act`` dispatch one
decision per protocol stage.

Alice kinds
    honest          knows the exact classical description and follows the protocol
    ignorant        no classical or quantum information about the state
    subspace-k      knows only a k-dimensional subspace containing the state
    steal           commits blind and keeps the received systems unmeasured
    random-distinct commits to q random distinct indices (the ignorant
                    optimum for the quantum receiver protocol)
    always-abort    aborts unconditionally (abort variant only)

Bob kinds
    honest          follows the protocol and records no guess
    substitute      swaps in a probe state, keeps the original unmeasured
    retain-guess    participates, then estimates from whatever he holds
    skip            ignores the protocol and estimates from his single copy
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .estimation import EstimationResult, covariant_estimate
from .qudit import (
    HermitianOperator,
    PureState,
    fidelity_sq,
    haar_random,
    measure_basis,
    measure_binary,
)


class AliceKind(Enum):
    HONEST_KNOWING = "honest"
    IGNORANT = "ignorant"
    SUBSPACE_KNOWLEDGE = "subspace"
    STEAL_STATE = "steal"
    RANDOM_DISTINCT_COMMIT = "random-distinct"
    ALWAYS_ABORT = "always-abort"


class BobKind(Enum):
    HONEST = "honest"
    SUBSTITUTE_STATE = "substitute"
    MEASURE_RETAIN_GUESS = "retain-guess"
    SKIP_PROTOCOL_MEASURE = "skip"


@dataclass(frozen=True)
class AliceStrategy:
    kind: AliceKind
    subspace_dim: int | None = None

    def __post_init__(self) -> None:
        if self.kind is AliceKind.SUBSPACE_KNOWLEDGE:
            if self.subspace_dim is None or self.subspace_dim < 1:
                raise ConfigurationError("subspace knowledge needs a dimension >= 1")
        elif self.subspace_dim is not None:
            raise ConfigurationError("subspace_dim only applies to subspace knowledge")

    @classmethod
    def from_name(cls, name: str) -> "AliceStrategy":
        if name.startswith("subspace-"):
            return cls(AliceKind.SUBSPACE_KNOWLEDGE, int(name.split("-", 1)[1]))
        try:
            return cls(AliceKind(name))
        except ValueError:
            raise ConfigurationError(f"unknown alice strategy {name!r}") from None


@dataclass(frozen=True)
class BobStrategy:
    kind: BobKind

    @classmethod
    def from_name(cls, name: str) -> "BobStrategy":
        try:
            return cls(BobKind(name))
        except ValueError:
            raise ConfigurationError(f"unknown bob strategy {name!r}") from None


def knowledge_subspace(
    true_state: PureState, k: int, rng: np.random.Generator
) -> np.ndarray:
    """Orthonormal basis (d x k) of a random k-dim subspace containing the state."""
    d = true_state.dim
    if not 1 <= k <= d:
        raise ConfigurationError(f"subspace dimension {k} outside [1, {d}]")
    cols = [true_state.amplitudes]
    while len(cols) < k:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        for c in cols:
            z = z - np.vdot(c, z) * c
        norm = np.linalg.norm(z)
        if norm > 1e-8:
            cols.append(z / norm)
    return np.column_stack(cols)


def _haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _complete_basis(fixed: list[np.ndarray], d: int, rng: np.random.Generator) -> np.ndarray:
    """Extend orthonormal columns to a full basis with a Haar-random completion."""
    cols = list(fixed)
    while len(cols) < d:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        for c in cols:
            z = z - np.vdot(c, z) * c
        norm = np.linalg.norm(z)
        if norm > 1e-8:
            cols.append(z / norm)
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# Stage contexts and plans


@dataclass(frozen=True)
class MeasurementChoiceContext:
    """Classical protocols: Alice picks the measurement and her committed set."""

    d: int
    q: int
    eps_c_target: float
    true_state: PureState
    subspace: np.ndarray | None
    rng: np.random.Generator


@dataclass(frozen=True)
class ClassicalPlan:
    basis: np.ndarray  # columns are the measurement vectors
    commit_values: tuple[int, ...]


@dataclass(frozen=True)
class CopyPreparationContext:
    """Sender protocol: Alice prepares the systems she hands over."""

    d: int
    n_copies: int
    true_state: PureState
    subspace: np.ndarray | None
    rng: np.random.Generator


@dataclass(frozen=True)
class DetectionCommitContext:
    """Receiver protocol: Alice measures the labeled systems and commits."""

    systems: tuple[PureState, ...]  # labels 1..N+1 in order
    q: int
    true_state: PureState
    abort_allowed: bool
    rng: np.random.Generator


@dataclass(frozen=True)
class DetectionCommitPlan:
    commit_values: tuple[int, ...] | None  # None when aborting
    aborted: bool
    positives: int | None  # detection count for honest kinds
    retained_systems: bool  # steal keeps everything unmeasured


@dataclass(frozen=True)
class PackageContext:
    """Receiver protocol: Bob packages the systems he sends to Alice."""

    qb_state: PureState
    n: int
    d: int
    rng: np.random.Generator


@dataclass(frozen=True)
class Package:
    systems: tuple[PureState, ...]
    announced_label: int  # 1-based index Bob will announce for his system
    retained: PureState | None


@dataclass(frozen=True)
class OutcomeReportContext:
    """Classical protocols: Bob measures and reports an outcome index."""

    basis: np.ndarray
    qb_state: PureState
    rng: np.random.Generator


@dataclass(frozen=True)
class OutcomeReport:
    reported: int | None  # None when Bob declines to take part
    retained: PureState | None  # the original state if he substituted it


@dataclass(frozen=True)
class FinalGuessContext:
    """Close-out: Bob turns whatever he holds into a guess, or nothing."""

    d: int
    basis: np.ndarray | None
    reported: int | None
    unveiled_value: int | None
    retained: PureState | None
    copies: tuple[PureState, ...] | None
    response_bit: int | None
    rng: np.random.Generator


# ---------------------------------------------------------------------------
# Alice


def alice_act(strategy: AliceStrategy, ctx) -> object:
    """Resolve one Alice decision for the given protocol stage."""
    if isinstance(ctx, MeasurementChoiceContext):
        return _alice_measurement_choice(strategy, ctx)
    if isinstance(ctx, CopyPreparationContext):
        return _alice_prepare_copies(strategy, ctx)
    if isinstance(ctx, DetectionCommitContext):
        return _alice_detection_commits(strategy, ctx)
    raise ConfigurationError(f"unsupported alice stage {type(ctx).__name__}")


def _rotate_with_overlap(
    true_state: PureState, eps_c: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """First basis vector with squared overlap 1 - eps_c, plus the residual direction."""
    d = true_state.dim
    eta = true_state.amplitudes
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    z = z - np.vdot(eta, z) * eta
    norm = np.linalg.norm(z)
    while norm <= 1e-8:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        z = z - np.vdot(eta, z) * eta
        norm = np.linalg.norm(z)
    r = z / norm
    u1 = np.sqrt(1.0 - eps_c) * eta + np.sqrt(eps_c) * r
    residual = eta - np.vdot(u1, eta) * u1
    res_norm = np.linalg.norm(residual)
    if res_norm > 1e-8:
        v = residual / res_norm
    else:
        v = r  # eps_c == 0: the true state is u1 itself
    return u1, v


def _alice_measurement_choice(
    strategy: AliceStrategy, ctx: MeasurementChoiceContext
) -> ClassicalPlan:
    d, q, rng = ctx.d, ctx.q, ctx.rng
    if strategy.kind is AliceKind.HONEST_KNOWING:
        if ctx.eps_c_target > 0.0 and q >= d:
            raise ConfigurationError(
                "eps_c_target > 0 needs q <= d - 1 so the residual stays uncovered"
            )
        u1, v = _rotate_with_overlap(ctx.true_state, ctx.eps_c_target, rng)
        basis = _complete_basis([u1, v], d, rng)
        # Committed set: the high-overlap vector plus q - 1 columns orthogonal
        # to the state's residual, so coverage is exactly 1 - eps_c_target.
        others = [j for j in range(2, d)]
        if q - 1 > len(others):
            extra = [1] + others  # only reachable when eps_c_target == 0
        else:
            extra = list(rng.choice(others, size=q - 1, replace=False)) if q > 1 else []
        commit_values = tuple(sorted([0] + [int(j) for j in extra[: q - 1]]))
        return ClassicalPlan(basis, commit_values)
    if strategy.kind is AliceKind.IGNORANT:
        basis = _haar_unitary(d, rng)
        commit_values = tuple(int(j) for j in rng.choice(d, size=q, replace=False))
        return ClassicalPlan(basis, commit_values)
    if strategy.kind is AliceKind.SUBSPACE_KNOWLEDGE:
        if ctx.subspace is None:
            raise ConfigurationError("subspace knowledge was not bound for this run")
        k = ctx.subspace.shape[1]
        rotated = ctx.subspace @ _haar_unitary(k, rng)
        basis = _complete_basis([rotated[:, j] for j in range(k)], d, rng)
        # The state lies in the first k columns; commit as many of those as fit.
        in_subspace = list(range(min(q, k)))
        filler = rng.choice(np.arange(k, d), size=q - len(in_subspace), replace=False)
        commit_values = tuple(sorted(in_subspace + [int(j) for j in filler]))
        return ClassicalPlan(basis, commit_values)
    raise ConfigurationError(
        f"alice strategy {strategy.kind.value!r} does not play classical protocols"
    )


def _alice_prepare_copies(
    strategy: AliceStrategy, ctx: CopyPreparationContext
) -> list[PureState]:
    if strategy.kind is AliceKind.HONEST_KNOWING:
        return [ctx.true_state] * ctx.n_copies
    if strategy.kind is AliceKind.IGNORANT:
        # Best blind strategy: a single random state, repeated.
        phi = haar_random(ctx.d, ctx.rng)
        return [phi] * ctx.n_copies
    if strategy.kind is AliceKind.SUBSPACE_KNOWLEDGE:
        if ctx.subspace is None:
            raise ConfigurationError("subspace knowledge was not bound for this run")
        k = ctx.subspace.shape[1]
        phi = PureState(ctx.subspace @ haar_random(k, ctx.rng).amplitudes)
        return [phi] * ctx.n_copies
    raise ConfigurationError(
        f"alice strategy {strategy.kind.value!r} does not play the sender protocol"
    )


def _alice_detection_commits(
    strategy: AliceStrategy, ctx: DetectionCommitContext
) -> DetectionCommitPlan:
    n_plus_1 = len(ctx.systems)
    q, rng = ctx.q, ctx.rng
    if strategy.kind is AliceKind.ALWAYS_ABORT:
        if not ctx.abort_allowed:
            raise ConfigurationError("always-abort requires the abort variant")
        return DetectionCommitPlan(None, True, None, False)
    if strategy.kind is AliceKind.HONEST_KNOWING:
        projector = HermitianOperator.from_state(ctx.true_state)
        detected = [
            label
            for label, system in enumerate(ctx.systems, start=1)
            if measure_binary(system, projector, rng).index == 1
        ]
        positives = len(detected)
        if positives > q:
            if ctx.abort_allowed:
                return DetectionCommitPlan(None, True, positives, False)
            chosen = rng.choice(detected, size=q, replace=False)
            values = tuple(int(v) for v in chosen)
        else:
            values = tuple(detected) + (0,) * (q - positives)
        return DetectionCommitPlan(values, False, positives, False)
    if strategy.kind in (
        AliceKind.IGNORANT,
        AliceKind.RANDOM_DISTINCT_COMMIT,
        AliceKind.STEAL_STATE,
    ):
        # Blind optimum: q random distinct labels. Stealing Alice commits the
        # same way but keeps every received system unmeasured.
        chosen = rng.choice(np.arange(1, n_plus_1 + 1), size=q, replace=False)
        values = tuple(int(v) for v in chosen)
        retained = strategy.kind is AliceKind.STEAL_STATE
        return DetectionCommitPlan(values, False, None, retained)
    raise ConfigurationError(
        f"alice strategy {strategy.kind.value!r} does not play the receiver protocol"
    )


# ---------------------------------------------------------------------------
# Bob


def bob_act(strategy: BobStrategy, ctx) -> object:
    """Resolve one Bob decision for the given protocol stage."""
    if isinstance(ctx, PackageContext):
        return _bob_package(strategy, ctx)
    if isinstance(ctx, OutcomeReportContext):
        return _bob_outcome_report(strategy, ctx)
    if isinstance(ctx, FinalGuessContext):
        return _bob_final_guess(strategy, ctx)
    raise ConfigurationError(f"unsupported bob stage {type(ctx).__name__}")


def _bob_package(strategy: BobStrategy, ctx: PackageContext) -> Package:
    n, d, rng = ctx.n, ctx.d, ctx.rng
    if strategy.kind is BobKind.HONEST:
        decoys = [haar_random(d, rng) for _ in range(n)]
        order = rng.permutation(n + 1)
        systems: list[PureState] = [None] * (n + 1)  # type: ignore[list-item]
        label = None
        for slot, source in enumerate(order):
            systems[slot] = ctx.qb_state if source == 0 else decoys[source - 1]
            if source == 0:
                label = slot + 1
        assert label is not None
        return Package(tuple(systems), label, None)
    if strategy.kind in (BobKind.MEASURE_RETAIN_GUESS, BobKind.SUBSTITUTE_STATE):
        # Keep the unknown state; send freshly drawn substitutes instead.
        systems = tuple(haar_random(d, rng) for _ in range(n + 1))
        label = int(rng.integers(1, n + 2))
        return Package(systems, label, ctx.qb_state)
    raise ConfigurationError(
        f"bob strategy {strategy.kind.value!r} does not play the receiver protocol"
    )


def _bob_outcome_report(strategy: BobStrategy, ctx: OutcomeReportContext) -> OutcomeReport:
    basis, rng = ctx.basis, ctx.rng
    if strategy.kind in (BobKind.HONEST, BobKind.MEASURE_RETAIN_GUESS):
        rotated = PureState(basis.conj().T @ ctx.qb_state.amplitudes)
        return OutcomeReport(measure_basis(rotated, rng), None)
    if strategy.kind is BobKind.SUBSTITUTE_STATE:
        probe = haar_random(ctx.qb_state.dim, rng)
        rotated = PureState(basis.conj().T @ probe.amplitudes)
        return OutcomeReport(measure_basis(rotated, rng), ctx.qb_state)
    if strategy.kind is BobKind.SKIP_PROTOCOL_MEASURE:
        return OutcomeReport(None, ctx.qb_state)
    raise ConfigurationError(
        f"bob strategy {strategy.kind.value!r} does not play classical protocols"
    )


def _bob_final_guess(strategy: BobStrategy, ctx: FinalGuessContext) -> PureState | None:
    rng = ctx.rng
    if strategy.kind is BobKind.HONEST:
        return None
    if strategy.kind is BobKind.SKIP_PROTOCOL_MEASURE:
        if ctx.retained is None:
            raise ConfigurationError("skip strategy holds no state to estimate")
        return covariant_estimate(ctx.retained, 1, rng).guess
    if strategy.kind is BobKind.SUBSTITUTE_STATE:
        if ctx.basis is not None and ctx.retained is not None:
            # Classical protocols: the unveiled index pins the projector down;
            # otherwise measure the kept state in the announced basis.
            if ctx.unveiled_value is not None:
                return PureState(ctx.basis[:, ctx.unveiled_value])
            rotated = PureState(ctx.basis.conj().T @ ctx.retained.amplitudes)
            outcome = measure_basis(rotated, rng)
            return PureState(ctx.basis[:, outcome])
        if ctx.retained is not None:
            return covariant_estimate(ctx.retained, 1, rng).guess
        raise ConfigurationError("substitute strategy holds nothing to estimate")
    if strategy.kind is BobKind.MEASURE_RETAIN_GUESS:
        if ctx.copies:
            # Sender protocol, honest Alice: every received copy plus the
            # original is available for estimation afterwards.
            return covariant_estimate(ctx.copies[0], len(ctx.copies), rng).guess
        if ctx.retained is not None:
            return covariant_estimate(ctx.retained, 1, rng).guess
        if ctx.basis is not None:
            index = ctx.unveiled_value if ctx.unveiled_value is not None else ctx.reported
            if index is None:
                return None
            return PureState(ctx.basis[:, index])
        return None
    raise ConfigurationError(f"unsupported bob strategy {strategy.kind.value!r}")


def record_guess(guess: PureState | None, true_state: PureState) -> EstimationResult | None:
    """Attach the achieved squared fidelity to a strategy's guess."""
    if guess is None:
        return None
    return EstimationResult(guess, fidelity_sq(guess, true_state))
