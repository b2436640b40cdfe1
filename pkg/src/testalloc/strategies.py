"""Batched allocation strategies over exponentially discounted test tallies.

Every strategy consumes the same evidence: per-unit positive/negative test
tallies discounted by a factor gamma each period, so a tally after T periods
is sum_s gamma^(T-s) * count_s.  A strategy maps the current tallies to a
batch of m_t unit selections plus the per-draw selection probabilities the
batch was drawn from; those probabilities feed the downstream prevalence
estimator, so each allocator must report the distribution it actually
sampled.

Allocators:

* ``allocate_random``      -- uniform over units.
* ``allocate_epsilon_greedy`` -- argmax of empirical positive rate with
  epsilon exploration; exact probabilities.
* ``allocate_thompson``    -- Beta(positives+1, negatives+1) posterior draw
  per draw; probabilities estimated by Monte Carlo.
* ``allocate_ucb``         -- draws proportional to Clopper-Pearson upper
  confidence bounds on the positive rate; exact probabilities.
* ``exp3_probabilities`` / ``exp3_update`` -- adversarial exponential-weights
  allocation with discounted log-weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import beta as _beta_dist

from .estimation import BatchObservation

__all__ = [
    "Allocation",
    "DiscountedCounts",
    "Exp3State",
    "REWARD_MODES",
    "allocate_epsilon_greedy",
    "allocate_random",
    "allocate_thompson",
    "allocate_ucb",
    "clopper_pearson_upper",
    "exp3_probabilities",
    "exp3_update",
    "selection_probability_mc",
    "update_discounted",
]

REWARD_MODES = ("raw", "batch_fraction", "unit_rate")

# sampler(rng, n) -> array of n winning unit indices
Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class DiscountedCounts:
    """Per-unit discounted positive/negative tallies.

    The discount may be 1 (no forgetting); with gamma < 1 every tally stays
    below m_max / (1 - gamma) for per-period counts bounded by m_max.
    """

    positives: np.ndarray
    negatives: np.ndarray
    discount: float

    def __post_init__(self) -> None:
        pos = np.asarray(self.positives, dtype=np.float64)
        neg = np.asarray(self.negatives, dtype=np.float64)
        if pos.shape != neg.shape or pos.ndim != 1 or pos.size == 0:
            raise ValueError("positives and negatives must be equal-length 1-d arrays")
        if (pos < 0.0).any() or (neg < 0.0).any():
            raise ValueError("tallies must be non-negative")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)

    @classmethod
    def zeros(cls, num_units: int, discount: float) -> "DiscountedCounts":
        return cls(np.zeros(num_units), np.zeros(num_units), discount)

    @property
    def num_units(self) -> int:
        return self.positives.size

    @property
    def trials(self) -> np.ndarray:
        return self.positives + self.negatives


@dataclass(frozen=True, eq=False)
class Exp3State:
    """Discounted exponential-weights state, kept in log space.

    Attributes:
        log_weights: Per-unit log weights; only differences matter.
        exploration: Mixing weight epsilon in (0, 1) toward uniform.
        discount: Per-period decay gamma in (0, 1] applied to log weights.
    """

    log_weights: np.ndarray
    exploration: float
    discount: float

    def __post_init__(self) -> None:
        lw = np.asarray(self.log_weights, dtype=np.float64)
        if lw.ndim != 1 or lw.size == 0:
            raise ValueError("log_weights must be a non-empty 1-d array")
        if not np.isfinite(lw).all():
            raise ValueError("log_weights must be finite")
        if not 0.0 < self.exploration < 1.0:
            raise ValueError("exploration must lie in (0, 1)")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def fresh(cls, num_units: int, exploration: float, discount: float) -> "Exp3State":
        return cls(np.zeros(num_units), exploration, discount)

    @property
    def num_units(self) -> int:
        return self.log_weights.size


@dataclass(frozen=True, eq=False)
class Allocation:
    """A batch of unit selections plus the distribution they were drawn from.

    Attributes:
        counts: Tests allocated per unit; non-negative ints summing to
            ``batch_size``.
        selection_probs: Per-draw selection distribution; sums to 1 and is
            positive wherever counts are.
        batch_size: m_t, the number of draws.
        probs_exact: True when ``selection_probs`` is the exact distribution,
            False when it is a Monte Carlo estimate.
    """

    counts: np.ndarray
    selection_probs: np.ndarray
    batch_size: int
    probs_exact: bool

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        probs = np.asarray(self.selection_probs, dtype=np.float64)
        if counts.shape != probs.shape or counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts and selection_probs must be equal-length 1-d arrays")
        if self.batch_size < 0:
            raise ValueError("batch_size must be non-negative")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        if int(counts.sum()) != self.batch_size:
            raise ValueError("counts must sum to batch_size")
        if (probs < 0.0).any() or abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError("selection_probs must be a distribution (sum 1 within 1e-9)")
        if ((counts > 0) & (probs <= 0.0)).any():
            raise ValueError("allocated units must have positive selection probability")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "selection_probs", probs)

    @property
    def num_units(self) -> int:
        return self.counts.size


def update_discounted(
    counts: DiscountedCounts, observation: BatchObservation
) -> DiscountedCounts:
    """Decay existing tallies by the discount and add one period's outcomes."""
    if observation.num_units != counts.num_units:
        raise ValueError("observation covers a different number of units")
    return DiscountedCounts(
        counts.discount * counts.positives + observation.positives,
        counts.discount * counts.negatives + observation.negatives,
        counts.discount,
    )


def _draw_batch(probs: np.ndarray, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    if batch_size < 0:
        raise ValueError("batch_size must be non-negative")
    return rng.multinomial(batch_size, probs)


def allocate_random(num_units: int, batch_size: int, rng: np.random.Generator) -> Allocation:
    """Allocate each of the m_t draws uniformly at random across units."""
    if num_units < 1:
        raise ValueError("num_units must be positive")
    probs = np.full(num_units, 1.0 / num_units)
    return Allocation(_draw_batch(probs, batch_size, rng), probs, batch_size, True)


def _greedy_probs(counts: DiscountedCounts, epsilon: float) -> np.ndarray:
    trials = counts.trials
    rates = np.zeros(counts.num_units)
    seen = trials > 0.0
    rates[seen] = counts.positives[seen] / trials[seen]
    best = rates == rates.max()  # exact-equality ties share the greedy mass
    probs = np.full(counts.num_units, epsilon / counts.num_units)
    probs[best] += (1.0 - epsilon) / best.sum()
    return probs


def allocate_epsilon_greedy(
    counts: DiscountedCounts, epsilon: float, batch_size: int, rng: np.random.Generator
) -> Allocation:
    """Favor the empirically best positive rate, exploring with rate epsilon.

    Each draw independently explores uniformly with probability epsilon and
    otherwise picks an argmax of positives / trials (untested units score 0;
    ties split the greedy mass uniformly), so the per-draw distribution is
    epsilon/K + (1-epsilon) * [k in argmax] / |argmax|, reported exactly.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    probs = _greedy_probs(counts, epsilon)
    return Allocation(_draw_batch(probs, batch_size, rng), probs, batch_size, True)


def _mc_win_counts(
    sampler: Sampler, num_units: int, draws: int, rng: np.random.Generator
) -> np.ndarray:
    # Chunk so samplers that materialize (n, K) arrays stay within memory.
    chunk = max(1, 2_000_000 // num_units)
    tallies = np.zeros(num_units, dtype=np.int64)
    remaining = draws
    while remaining > 0:
        n = min(chunk, remaining)
        winners = np.asarray(sampler(rng, n), dtype=np.int64)
        if winners.shape != (n,) or (winners < 0).any() or (winners >= num_units).any():
            raise ValueError("sampler must return n winner indices in [0, num_units)")
        tallies += np.bincount(winners, minlength=num_units)
        remaining -= n
    return tallies


def selection_probability_mc(
    sampler: Sampler, num_units: int, draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Estimate per-unit win probabilities by Monte Carlo.

    Args:
        sampler: Callable (rng, n) -> n winning unit indices, one per
            simulated draw.
        num_units: Number of units K.
        draws: Number of simulated draws M >= 1.
        rng: Source of randomness.

    Returns:
        Empirical win frequency per unit; sums to 1.
    """
    if draws < 1:
        raise ValueError("draws must be positive")
    return _mc_win_counts(sampler, num_units, draws, rng) / float(draws)


def allocate_thompson(
    counts: DiscountedCounts,
    batch_size: int,
    rng: np.random.Generator,
    mc_draws: int = 100_000,
) -> Allocation:
    """Thompson sampling from Beta(positives + 1, negatives + 1) posteriors.

    Each of the m_t draws samples one rate per unit from its posterior and
    selects the argmax.  Selection probabilities have no closed form, so they
    are estimated from ``mc_draws`` auxiliary posterior rounds pooled with
    the realized batch draws themselves (also draws from the same argmax
    distribution); the pooling guarantees every allocated unit reports a
    positive probability.  ``probs_exact`` is False accordingly.
    """
    if mc_draws < 1:
        raise ValueError("mc_draws must be positive")
    a = counts.positives + 1.0
    b = counts.negatives + 1.0
    k = counts.num_units

    def sampler(r: np.random.Generator, n: int) -> np.ndarray:
        return r.beta(a, b, size=(n, k)).argmax(axis=1)

    tallies = (
        np.bincount(sampler(rng, batch_size), minlength=k)
        if batch_size > 0
        else np.zeros(k, dtype=np.int64)
    )
    aux = _mc_win_counts(sampler, k, mc_draws, rng)
    probs = (aux + tallies) / float(mc_draws + batch_size)
    return Allocation(tallies, probs, batch_size, False)


def clopper_pearson_upper(
    positives: float, trials: float, confidence_alpha: float = 0.05
) -> float:
    """Upper Clopper-Pearson bound on a success rate at level 1 - alpha/2.

    The bound is the Beta(positives + 1, trials - positives) quantile at
    1 - alpha/2, which also accepts the non-integer tallies produced by
    discounting.  Degenerate evidence (no trials, or all positive) returns 1.

    Raises:
        ValueError: If positives > trials or either count is negative.
    """
    if not 0.0 < confidence_alpha < 1.0:
        raise ValueError("confidence_alpha must lie in (0, 1)")
    if positives < 0.0 or trials < 0.0:
        raise ValueError("counts must be non-negative")
    if positives > trials:
        raise ValueError("positives cannot exceed trials")
    if trials == 0.0 or positives >= trials:
        return 1.0
    return float(_beta_dist.ppf(1.0 - confidence_alpha / 2.0, positives + 1.0, trials - positives))


def _ucb_scores(counts: DiscountedCounts, confidence_alpha: float) -> np.ndarray:
    scores = np.ones(counts.num_units)
    trials = counts.trials
    live = (trials > 0.0) & (counts.positives < trials)
    if live.any():
        scores[live] = _beta_dist.ppf(
            1.0 - confidence_alpha / 2.0,
            counts.positives[live] + 1.0,
            trials[live] - counts.positives[live],
        )
    return scores


def allocate_ucb(
    counts: DiscountedCounts,
    confidence_alpha: float,
    batch_size: int,
    rng: np.random.Generator,
) -> Allocation:
    """Allocate draws proportionally to Clopper-Pearson upper bounds.

    Units with no (discounted) evidence, or with all-positive evidence, score
    1; scores are normalized into the exact per-draw distribution.
    """
    if not 0.0 < confidence_alpha < 1.0:
        raise ValueError("confidence_alpha must lie in (0, 1)")
    scores = _ucb_scores(counts, confidence_alpha)
    probs = scores / scores.sum()
    return Allocation(_draw_batch(probs, batch_size, rng), probs, batch_size, True)


def exp3_probabilities(state: Exp3State) -> np.ndarray:
    """Per-draw distribution: exploration-mixed normalized weights.

    pi_k = (1 - eps) * w_k / sum(w) + eps / K, computed with a max-shift so
    large log weights cannot overflow.  Every unit keeps pi_k >= eps / K.
    """
    shifted = state.log_weights - state.log_weights.max()
    w = np.exp(shifted)
    return (1.0 - state.exploration) * w / w.sum() + state.exploration / state.num_units


def exp3_update(
    state: Exp3State,
    allocation: Allocation,
    observation: BatchObservation,
    reward_mode: str = "batch_fraction",
) -> Exp3State:
    """One period's exponential-weights update from a completed batch.

    All of a unit's draws are aggregated into a single importance-weighted
    update: sampled units gain exploration * r_k / (pi_k * K) on top of the
    discount-decayed log weight, unsampled units just decay.  The reward r_k
    is, per ``reward_mode``: the positive count ("raw"), the positive count
    over the batch size ("batch_fraction"), or the unit's positive rate over
    its own tests ("unit_rate").

    Raises:
        ValueError: If a sampled unit has non-positive selection probability
            or the reward mode is unknown.
    """
    k = state.num_units
    if allocation.num_units != k or observation.num_units != k:
        raise ValueError("allocation and observation must cover the state's units")
    if reward_mode not in REWARD_MODES:
        raise ValueError(f"reward_mode must be one of {REWARD_MODES}")
    positives = observation.positives.astype(np.float64)
    if reward_mode == "raw":
        rewards = positives
    elif reward_mode == "batch_fraction":
        m = allocation.batch_size
        rewards = positives / m if m > 0 else np.zeros(k)
    else:  # unit_rate
        rewards = np.zeros(k)
        tested = observation.tests > 0
        rewards[tested] = positives[tested] / observation.tests[tested]
    sampled = allocation.counts > 0
    if (allocation.selection_probs[sampled] <= 0.0).any():
        raise ValueError("sampled units must have positive selection probability")
    log_weights = state.discount * state.log_weights
    log_weights[sampled] += (
        state.exploration * rewards[sampled] / (allocation.selection_probs[sampled] * k)
    )
    return Exp3State(log_weights, state.exploration, state.discount)
