"""Tests for prevalence ground truth and the weighted estimator."""

import numpy as np
import pytest

from testalloc.estimation import (
    BatchObservation,
    EstimatorInvalidError,
    ht_estimate,
    inclusion_probability,
    true_prevalence,
)


def simulate_batch(
    rng: np.random.Generator,
    cases: np.ndarray,
    pops: np.ndarray,
    probs: np.ndarray,
    batch_size: int,
) -> BatchObservation:
    """Draw one batch: multinomial unit selection, hypergeometric outcomes."""
    tests = rng.multinomial(batch_size, probs)
    tests = np.minimum(tests, pops)
    positives = rng.hypergeometric(cases, pops - cases, np.maximum(tests, 1))
    positives[tests == 0] = 0
    return BatchObservation(tests, positives, probs, pops)


class TestBatchObservation:
    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            BatchObservation(np.array([1, 2]), np.array([0]), np.array([0.5, 0.5]), np.array([10, 10]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            BatchObservation(np.array([]), np.array([]), np.array([]), np.array([]))

    def test_rejects_positives_above_tests(self):
        with pytest.raises(ValueError):
            BatchObservation(np.array([2]), np.array([3]), np.array([1.0]), np.array([10]))

    def test_rejects_tests_above_population(self):
        with pytest.raises(ValueError):
            BatchObservation(np.array([11]), np.array([0]), np.array([1.0]), np.array([10]))

    def test_rejects_zero_probability_on_tested_unit(self):
        with pytest.raises(ValueError):
            BatchObservation(
                np.array([1, 0]), np.array([0, 0]), np.array([0.0, 1.0]), np.array([10, 10])
            )

    def test_rejects_probabilities_outside_unit_interval(self):
        with pytest.raises(ValueError):
            BatchObservation(np.array([1]), np.array([0]), np.array([1.5]), np.array([10]))

    def test_derived_quantities(self):
        obs = BatchObservation(
            np.array([3, 0, 2]), np.array([1, 0, 2]), np.array([0.5, 0.25, 0.25]), np.array([10, 10, 10])
        )
        assert obs.num_units == 3
        assert obs.batch_size == 5
        assert obs.negatives.tolist() == [2, 0, 0]

    def test_untested_unit_may_have_zero_probability(self):
        obs = BatchObservation(np.array([0, 1]), np.array([0, 1]), np.array([0.0, 1.0]), np.array([10, 10]))
        assert obs.batch_size == 1


class TestTruePrevalence:
    def test_single_unit(self):
        assert true_prevalence(np.array([25.0]), np.array([100])) == 0.25

    def test_pools_across_units(self):
        """Prevalence is total cases over total population, not a mean of rates."""
        value = true_prevalence(np.array([10.0, 90.0]), np.array([100, 900]))
        assert value == pytest.approx(0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            true_prevalence(np.array([101.0]), np.array([100]))
        with pytest.raises(ValueError):
            true_prevalence(np.array([-1.0]), np.array([100]))
        with pytest.raises(ValueError):
            true_prevalence(np.array([1.0, 2.0]), np.array([100]))


class TestHtEstimate:
    def test_known_value(self):
        obs = BatchObservation(
            np.array([10, 10]), np.array([5, 5]), np.array([0.5, 0.5]), np.array([100, 100])
        )
        assert ht_estimate(obs) == pytest.approx(0.5)

    def test_census_recovers_positive_fraction(self):
        """Testing a whole single unit with pi = 1 returns positives / N exactly."""
        obs = BatchObservation(np.array([40]), np.array([13]), np.array([1.0]), np.array([40]))
        assert ht_estimate(obs) == pytest.approx(13.0 / 40.0, rel=1e-15)

    def test_not_clipped(self):
        """A lucky positive draw from a tiny-probability unit can exceed 1."""
        obs = BatchObservation(
            np.array([1, 0]), np.array([1, 0]), np.array([0.01, 0.99]), np.array([100, 100])
        )
        assert ht_estimate(obs) == pytest.approx(50.0)

    def test_empty_batch_rejected(self):
        obs = BatchObservation(np.array([0, 0]), np.array([0, 0]), np.array([0.5, 0.5]), np.array([10, 10]))
        with pytest.raises(ValueError):
            ht_estimate(obs)

    def test_unbiased_over_repeated_batches(self):
        """Mean estimate over many simulated batches approaches true prevalence."""
        rng = np.random.default_rng(42)
        pops = np.array([50, 50, 50])
        cases = np.array([10, 20, 5])
        probs = np.array([0.2, 0.3, 0.5])
        mu = true_prevalence(cases.astype(float), pops)
        reps = 20_000
        estimates = np.array(
            [ht_estimate(simulate_batch(rng, cases, pops, probs, 10)) for _ in range(reps)]
        )
        se = estimates.std(ddof=1) / np.sqrt(reps)
        assert abs(estimates.mean() - mu) < 4 * se

    def test_variance_shrinks_with_batch_size(self):
        """Larger batches give lower-variance estimates for a fixed design."""
        rng = np.random.default_rng(7)
        pops = np.array([60, 60])
        cases = np.array([12, 30])
        probs = np.array([0.5, 0.5])
        variances = []
        for m in (4, 16, 64):
            estimates = np.array(
                [ht_estimate(simulate_batch(rng, cases, pops, probs, m)) for _ in range(4000)]
            )
            variances.append(estimates.var(ddof=1))
        assert variances[0] > variances[1] > variances[2]


class TestInclusionProbability:
    def test_known_value(self):
        assert inclusion_probability(0.3, 10, 50) == pytest.approx(0.06)

    def test_full_coverage_allowed(self):
        assert inclusion_probability(1.0, 50, 50) == 1.0

    def test_oversampled_design_rejected(self):
        with pytest.raises(EstimatorInvalidError):
            inclusion_probability(0.9, 100, 50)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            inclusion_probability(1.5, 10, 50)
        with pytest.raises(ValueError):
            inclusion_probability(0.5, -1, 50)
        with pytest.raises(ValueError):
            inclusion_probability(0.5, 10, 0)

    def test_matches_simulated_individual_frequency(self):
        """A tagged individual is tested at the advertised rate."""
        rng = np.random.default_rng(3)
        pops = np.array([50, 50])
        probs = np.array([0.3, 0.7])
        m, reps = 10, 20_000
        hits = 0
        for _ in range(reps):
            tests = rng.multinomial(m, probs)
            chosen = rng.choice(pops[0], size=min(tests[0], pops[0]), replace=False)
            hits += 0 in chosen
        expected = inclusion_probability(probs[0], m, pops[0])
        se = np.sqrt(expected * (1 - expected) / reps)
        assert abs(hits / reps - expected) < 4 * se
