"""Estimation strategies against the (m + 1) / (m + d) law."""

import math

import numpy as np
import pytest

from qwitness.errors import DimensionError
from qwitness.estimation import (
    basis_measure_guess,
    covariant_estimate,
    mean_estimation_fsq,
)
from qwitness.qudit import PureState, fidelity_sq, haar_random


def test_law_values():
    assert mean_estimation_fsq(0, 2) == pytest.approx(1 / 2)
    assert mean_estimation_fsq(0, 5) == pytest.approx(1 / 5)
    assert mean_estimation_fsq(1, 2) == pytest.approx(2 / 3)
    assert mean_estimation_fsq(3, 4) == pytest.approx(4 / 7)


def test_law_rejects_bad_arguments():
    with pytest.raises(DimensionError):
        mean_estimation_fsq(1, 1)
    with pytest.raises(ValueError):
        mean_estimation_fsq(-1, 2)


def test_law_monotone_in_copies_and_dimension():
    for d in range(2, 11):
        values = [mean_estimation_fsq(m, d) for m in range(11)]
        assert all(a <= b for a, b in zip(values, values[1:]))
    for m in range(11):
        values = [mean_estimation_fsq(m, d) for d in range(2, 11)]
        assert all(a >= b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_covariant_estimate_matches_law(m, d):
    rng = np.random.default_rng(100 * m + d)
    trials = 50_000
    values = np.empty(trials)
    for i in range(trials):
        eta = haar_random(d, rng)
        values[i] = covariant_estimate(eta, m, rng).achieved_fsq
    target = mean_estimation_fsq(m, d)
    se = values.std(ddof=1) / math.sqrt(trials)
    assert abs(values.mean() - target) <= 4 * se


def test_covariant_estimate_concentrates_for_many_copies():
    rng = np.random.default_rng(16)
    trials = 1000
    values = np.empty(trials)
    for i in range(trials):
        eta = haar_random(2, rng)
        values[i] = covariant_estimate(eta, 200, rng).achieved_fsq
    assert values.mean() > 0.95


def test_covariant_estimate_records_fidelity_against_input():
    rng = np.random.default_rng(17)
    eta = haar_random(3, rng)
    result = covariant_estimate(eta, 2, rng)
    assert result.achieved_fsq == pytest.approx(fidelity_sq(result.guess, eta))


def test_covariant_estimate_rejects_zero_copies():
    rng = np.random.default_rng(18)
    with pytest.raises(ValueError):
        covariant_estimate(haar_random(2, rng), 0, rng)


def test_basis_guess_on_basis_state():
    rng = np.random.default_rng(19)
    eta = PureState([0, 0, 1, 0])
    result = basis_measure_guess(eta, rng)
    assert result.achieved_fsq == pytest.approx(1.0)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_basis_guess_haar_average(d):
    rng = np.random.default_rng(200 + d)
    trials = 100_000
    values = np.empty(trials)
    for i in range(trials):
        values[i] = basis_measure_guess(haar_random(d, rng), rng).achieved_fsq
    target = 2 / (d + 1)
    se = values.std(ddof=1) / math.sqrt(trials)
    assert abs(values.mean() - target) <= 4 * se
