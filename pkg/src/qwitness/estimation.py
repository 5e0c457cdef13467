"""State-estimation strategies and the closed-form fidelity law.

The optimal mean squared fidelity achievable from m copies of an
unknown Haar-random qudit is (m + 1) / (m + d). The covariant
estimator below realizes it by sampling a guess from the exact
posterior density, the single-copy basis estimator reproduces the
m = 1 value 2 / (d + 1) on Haar-averaged inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SamplingError
from .qudit import PureState, fidelity_sq, measure_basis

# Candidate draws allowed in one rejection-sampling call.
REJECTION_CAP = 10**7
_BLOCK = 64


@dataclass(frozen=True)
class EstimationResult:
    """A guess for an unknown state and its recorded squared fidelity."""

    guess: PureState
    achieved_fsq: float


def mean_estimation_fsq(m: int, d: int) -> float:
    """Optimal mean squared fidelity of estimation from m copies.

    Returns (m + 1) / (m + d). The m = 0 case is the prior mean 1/d,
    the m = 1 case is the best guess from a single copy, 2 / (d + 1).
    """
    if d < 2:
        raise DimensionError("estimation law needs d >= 2")
    if m < 0:
        raise ValueError("copy count must be nonnegative")
    return (m + 1) / (m + d)


def covariant_estimate(
    eta: PureState, m: int, rng: np.random.Generator
) -> EstimationResult:
    """Simulate the optimal covariant estimate from m copies of ``eta``.

    Draws the guess phi with density proportional to |<phi|eta>|^(2m)
    over the Haar measure, by rejection sampling: propose phi Haar,
    accept with probability |<phi|eta>|^(2m). The acceptance weight is
    bounded by 1, so no normalization constant is needed. Over many
    trials the mean of the recorded squared fidelity converges to
    (m + 1) / (m + d).
    """
    if m < 1:
        raise ValueError("covariant estimation needs m >= 1")
    d = eta.dim
    target = eta.amplitudes.conj()
    draws = 0
    while draws < REJECTION_CAP:
        block = min(_BLOCK, REJECTION_CAP - draws)
        z = rng.standard_normal((block, d)) + 1j * rng.standard_normal((block, d))
        norms = np.linalg.norm(z, axis=1)
        overlaps = np.abs(z @ target) / norms
        accept = rng.random(block) < overlaps ** (2 * m)
        draws += block
        hits = np.nonzero(accept)[0]
        if hits.size:
            k = int(hits[0])
            guess = PureState(z[k] / norms[k])
            return EstimationResult(guess, fidelity_sq(guess, eta))
    raise SamplingError(f"rejection sampling exceeded {REJECTION_CAP} draws")


def basis_measure_guess(eta: PureState, rng: np.random.Generator) -> EstimationResult:
    """Measure ``eta`` in the computational basis and guess the outcome vector.

    Averaged over Haar-random inputs the mean squared fidelity of this
    single-copy strategy is 2 / (d + 1).
    """
    index = measure_basis(eta, rng)
    amps = np.zeros(eta.dim, dtype=np.complex128)
    amps[index] = 1.0
    guess = PureState(amps)
    return EstimationResult(guess, fidelity_sq(guess, eta))
