"""Prevalence: ground truth and inverse-probability-weighted estimation.

True prevalence over K units is total cases over total population.  The
estimator weights each unit's positive count by N_k / pi_k, where pi_k is the
per-draw selection probability the allocation used, giving an unbiased
estimate of prevalence from a batch of m_t tests:

    mu_hat = (1 / (N * m_t)) * sum_k (N_k / pi_k) * positives_k.

Unbiasedness relies on each of the m_t test draws landing on unit k with
probability pi_k and sampling individuals without replacement within the
unit; the per-individual inclusion probability is then m_t * pi_k / N_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BatchObservation",
    "EstimatorInvalidError",
    "ht_estimate",
    "inclusion_probability",
    "true_prevalence",
]


class EstimatorInvalidError(ValueError):
    """The sampling design is incompatible with unbiased estimation."""


@dataclass(frozen=True, eq=False)
class BatchObservation:
    """Outcome of one period's test batch across all units.

    Attributes:
        tests: Tests administered per unit (non-negative ints).
        positives: Positive results per unit, positives_k <= tests_k.
        selection_probs: Per-draw selection probabilities the batch was
            generated from; any tested unit must have positive probability.
        unit_populations: N_k per unit; tests_k <= N_k.
    """

    tests: np.ndarray
    positives: np.ndarray
    selection_probs: np.ndarray
    unit_populations: np.ndarray

    def __post_init__(self) -> None:
        tests = np.asarray(self.tests, dtype=np.int64)
        positives = np.asarray(self.positives, dtype=np.int64)
        probs = np.asarray(self.selection_probs, dtype=np.float64)
        pops = np.asarray(self.unit_populations, dtype=np.int64)
        if not tests.shape == positives.shape == probs.shape == pops.shape or tests.ndim != 1:
            raise ValueError("all fields must be 1-d arrays of equal length")
        if tests.size == 0:
            raise ValueError("observation must cover at least one unit")
        if (pops < 1).any():
            raise ValueError("unit populations must be positive")
        if (tests < 0).any() or (tests > pops).any():
            raise ValueError("tests must satisfy 0 <= tests_k <= N_k")
        if (positives < 0).any() or (positives > tests).any():
            raise ValueError("positives must satisfy 0 <= positives_k <= tests_k")
        if (probs < 0.0).any() or (probs > 1.0).any():
            raise ValueError("selection probabilities must lie in [0, 1]")
        if ((tests > 0) & (probs <= 0.0)).any():
            raise ValueError("tested units must have positive selection probability")
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "positives", positives)
        object.__setattr__(self, "selection_probs", probs)
        object.__setattr__(self, "unit_populations", pops)

    @property
    def num_units(self) -> int:
        return self.tests.size

    @property
    def batch_size(self) -> int:
        """m_t: total tests in the batch."""
        return int(self.tests.sum())

    @property
    def negatives(self) -> np.ndarray:
        return self.tests - self.positives


def true_prevalence(case_counts: np.ndarray, unit_populations: np.ndarray) -> float:
    """Exact prevalence: total cases over total population.

    Args:
        case_counts: Cases per unit, 0 <= cases_k <= N_k.
        unit_populations: N_k per unit, positive.
    """
    cases = np.asarray(case_counts, dtype=np.float64)
    pops = np.asarray(unit_populations, dtype=np.float64)
    if cases.shape != pops.shape or cases.ndim != 1 or cases.size == 0:
        raise ValueError("case_counts and unit_populations must be equal-length 1-d arrays")
    if (pops < 1).any():
        raise ValueError("unit populations must be positive")
    if (cases < 0).any() or (cases > pops).any():
        raise ValueError("case counts must lie in [0, N_k]")
    return float(cases.sum() / pops.sum())


def ht_estimate(observation: BatchObservation) -> float:
    """Inverse-probability-weighted prevalence estimate for one batch.

    Returns (1 / (N * m_t)) * sum_k (N_k / pi_k) * positives_k.  The value is
    deliberately not clipped to [0, 1]; clip downstream if a bounded estimate
    is needed.

    Raises:
        ValueError: If the batch is empty or a tested unit has pi_k = 0.
    """
    m = observation.batch_size
    if m < 1:
        raise ValueError("batch must contain at least one test")
    tested = observation.tests > 0
    if (observation.selection_probs[tested] <= 0.0).any():
        raise ValueError("tested units must have positive selection probability")
    pops = observation.unit_populations.astype(np.float64)
    total = pops.sum()
    weighted = (
        pops[tested] / observation.selection_probs[tested] * observation.positives[tested]
    ).sum()
    return float(weighted / (total * m))


def inclusion_probability(
    selection_prob: float, batch_size: int, unit_population: int
) -> float:
    """Probability that a given individual in a unit is tested this period.

    Each of the m_t draws picks the unit with probability ``selection_prob``
    and then samples individuals without replacement, so an individual is
    included with probability m_t * pi / N_k.

    Raises:
        EstimatorInvalidError: If m_t * pi > N_k, i.e. the design expects more
            tests in the unit than it has members.
    """
    if not 0.0 <= selection_prob <= 1.0:
        raise ValueError("selection_prob must lie in [0, 1]")
    if batch_size < 0 or int(batch_size) != batch_size:
        raise ValueError("batch_size must be a non-negative integer")
    if unit_population < 1 or int(unit_population) != unit_population:
        raise ValueError("unit_population must be a positive integer")
    expected = batch_size * selection_prob
    if expected > unit_population:
        raise EstimatorInvalidError(
            "design oversamples the unit: m_t * pi exceeds its population"
        )
    return expected / unit_population
