"""Episode and experiment orchestration.

One episode walks a fixed set of units through T periods: record true
prevalence, allocate the period's test budget with the configured strategy,
cap allocations at unit populations (redistributing any excess), draw test
outcomes without replacement within each unit, estimate prevalence from the
batch, then feed the outcomes back to the strategy.

Experiments pair replications across strategies through seed discipline:
unit parameters derive from (master seed, replication) and outcome noise from
(master seed, replication, budget), so two strategies compared at the same
budget see identical worlds and the random-vs-random difference is exactly
zero.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import disease, estimation, strategies

__all__ = [
    "ComparisonRow",
    "ConfigError",
    "EngineInvariantError",
    "EstimationSummary",
    "Scenario",
    "SimConfig",
    "SimTrace",
    "STRATEGY_NAMES",
    "draw_scenario",
    "experiment_cell",
    "run_episode",
    "run_estimation",
    "run_experiment",
    "run_replication",
    "run_simulation",
    "summarize",
]

STRATEGY_NAMES = ("random", "greedy", "thompson", "ucb", "exp3")

# Stream tags for seed derivation; never reorder (breaks reproducibility).
_SCENARIO_STREAM = 1
_STRATEGY_STREAM = 2
_OUTCOME_STREAM = 3


class ConfigError(ValueError):
    """A configuration value violates its contract."""


class EngineInvariantError(RuntimeError):
    """A runtime invariant of the simulation was violated."""


@dataclass(frozen=True)
class SimConfig:
    """Complete description of a simulation run.

    ``population`` and ``budget`` accept either a scalar (shared by all units
    / periods) or a per-unit / per-period tuple.
    """

    units: int
    seed: int
    population: int | tuple[int, ...] = 1000
    init_cases_min: int = 1
    init_cases_max: int = 20
    growth_rate_min: float = 0.0
    growth_rate_max: float = 1.0
    test_effect: float = 0.001
    horizon: int = 30
    budget: int | tuple[int, ...] = 100
    strategy: str = "random"
    replications: int = 30
    gamma: float = 0.5
    epsilon: float = 0.1
    confidence_alpha: float = 0.05
    exp3_epsilon: float = 0.1
    reward_mode: str = "batch_fraction"
    thompson_mc_draws: int = 100_000

    def populations(self) -> np.ndarray:
        if isinstance(self.population, (int, np.integer)):
            return np.full(self.units, int(self.population), dtype=np.int64)
        pops = np.asarray(self.population, dtype=np.int64)
        if pops.shape != (self.units,):
            raise ConfigError("population list must have one entry per unit")
        return pops

    def budgets(self) -> np.ndarray:
        if isinstance(self.budget, (int, np.integer)):
            return np.full(self.horizon, int(self.budget), dtype=np.int64)
        budgets = np.asarray(self.budget, dtype=np.int64)
        if budgets.shape != (self.horizon,):
            raise ConfigError("budget list must have one entry per period")
        return budgets

    def validate(self) -> None:
        """Raise ConfigError on any contract violation."""
        if self.units < 1:
            raise ConfigError("units must be a positive integer")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        pops = self.populations()
        if (pops < 1).any():
            raise ConfigError("populations must be positive integers")
        if not 1 <= self.init_cases_min <= self.init_cases_max:
            raise ConfigError("init case range must satisfy 1 <= min <= max")
        if self.init_cases_max > int(pops.min()):
            raise ConfigError("init_cases_max cannot exceed the smallest population")
        if not 0.0 <= self.growth_rate_min < self.growth_rate_max:
            raise ConfigError("growth rate range must satisfy 0 <= min < max")
        if self.test_effect < 0.0:
            raise ConfigError("test_effect must be non-negative")
        if self.horizon < 1:
            raise ConfigError("horizon must be a positive integer")
        if (self.budgets() < 1).any():
            raise ConfigError("budget must be at least 1 in every period")
        if self.strategy not in STRATEGY_NAMES:
            raise ConfigError(f"strategy must be one of {STRATEGY_NAMES}")
        if self.replications < 1:
            raise ConfigError("replications must be a positive integer")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0,1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0.0 < self.confidence_alpha < 1.0:
            raise ConfigError("confidence_alpha must lie in (0, 1)")
        if not 0.0 < self.exp3_epsilon < 1.0:
            raise ConfigError("exp3_epsilon must lie in (0, 1)")
        if self.reward_mode not in strategies.REWARD_MODES:
            raise ConfigError(f"reward_mode must be one of {strategies.REWARD_MODES}")
        if self.thompson_mc_draws < 10_000:
            raise ConfigError("thompson_mc_draws must be at least 10000 for estimation")


@dataclass(frozen=True)
class Scenario:
    """Per-unit world parameters drawn once per replication."""

    growth_rates: np.ndarray
    initial_cases: np.ndarray
    populations: np.ndarray


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Recorded arrays from one episode.

    ``cases[t]`` holds pre-test case counts at the start of period t, with an
    extra final row ``cases[horizon]``; all other arrays have one row or
    entry per period.  ``mu_hat`` is NaN for periods with an empty batch.
    """

    strategy: str
    budgets: np.ndarray  # (T,)
    tests: np.ndarray  # (T, K)
    positives: np.ndarray  # (T, K)
    selection_probs: np.ndarray  # (T, K)
    cases: np.ndarray  # (T + 1, K)
    mu_true: np.ndarray  # (T,)
    mu_hat: np.ndarray  # (T,)
    saturation_events: int

    @property
    def horizon(self) -> int:
        return self.tests.shape[0]

    @property
    def num_units(self) -> int:
        return self.tests.shape[1]

    @property
    def cumulative_tests(self) -> np.ndarray:
        return self.tests.cumsum(axis=0)

    @property
    def final_total_cases(self) -> float:
        return float(self.cases[-1].sum())


def _digest32(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big")


def _budget_key(config: SimConfig) -> int:
    return _digest32(",".join(str(int(b)) for b in config.budgets()))


def _rng(entropy: Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def scenario_rng(config: SimConfig, replication: int) -> np.random.Generator:
    return _rng([config.seed, _SCENARIO_STREAM, replication])


def episode_rngs(
    config: SimConfig, replication: int
) -> tuple[np.random.Generator, np.random.Generator]:
    """Strategy and outcome streams for one replication.

    The outcome stream is keyed by (seed, replication, budget) only, so all
    strategies compared at one budget share the same outcome noise.
    """
    budget_key = _budget_key(config)
    strategy_rng = _rng(
        [config.seed, _STRATEGY_STREAM, replication, budget_key, _digest32(config.strategy)]
    )
    outcome_rng = _rng([config.seed, _OUTCOME_STREAM, replication, budget_key])
    return strategy_rng, outcome_rng


def draw_scenario(config: SimConfig, rng: np.random.Generator) -> Scenario:
    """Draw per-unit growth rates and initial cases for one replication."""
    pops = config.populations()
    alphas = rng.uniform(config.growth_rate_min, config.growth_rate_max, size=config.units)
    while True:
        bad = alphas <= 0.0  # growth rates must be strictly positive
        if not bad.any():
            break
        alphas[bad] = rng.uniform(
            config.growth_rate_min, config.growth_rate_max, size=int(bad.sum())
        )
    initial = rng.integers(config.init_cases_min, config.init_cases_max + 1, size=config.units)
    return Scenario(alphas, initial.astype(np.float64), pops)


class StrategyDriver:
    """Binds one strategy's allocation and update rules to episode state."""

    def __init__(self, config: SimConfig, num_units: int) -> None:
        if config.strategy not in STRATEGY_NAMES:
            raise ConfigError(f"strategy must be one of {STRATEGY_NAMES}")
        self._config = config
        self._name = config.strategy
        self._counts: strategies.DiscountedCounts | None = None
        self._exp3: strategies.Exp3State | None = None
        self._num_units = num_units
        if self._name in ("greedy", "thompson", "ucb"):
            self._counts = strategies.DiscountedCounts.zeros(num_units, config.gamma)
        elif self._name == "exp3":
            self._exp3 = strategies.Exp3State.fresh(
                num_units, config.exp3_epsilon, config.gamma
            )

    def allocate(self, batch_size: int, rng: np.random.Generator) -> strategies.Allocation:
        cfg = self._config
        if self._name == "random":
            return strategies.allocate_random(self._num_units, batch_size, rng)
        if self._name == "greedy":
            return strategies.allocate_epsilon_greedy(
                self._counts, cfg.epsilon, batch_size, rng
            )
        if self._name == "thompson":
            return strategies.allocate_thompson(
                self._counts, batch_size, rng, cfg.thompson_mc_draws
            )
        if self._name == "ucb":
            return strategies.allocate_ucb(self._counts, cfg.confidence_alpha, batch_size, rng)
        probs = strategies.exp3_probabilities(self._exp3)
        counts = rng.multinomial(batch_size, probs)
        return strategies.Allocation(counts, probs, batch_size, True)

    def observe(
        self, allocation: strategies.Allocation, observation: estimation.BatchObservation
    ) -> None:
        if self._counts is not None:
            self._counts = strategies.update_discounted(self._counts, observation)
        elif self._exp3 is not None:
            self._exp3 = strategies.exp3_update(
                self._exp3, allocation, observation, self._config.reward_mode
            )


def _cap_and_redistribute(
    counts: np.ndarray,
    probs: np.ndarray,
    populations: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, int]:
    """Cap per-unit tests at the unit population, redistributing the excess.

    Spilled tests are redrawn from the selection distribution restricted to
    unsaturated units; the total is conserved.  Returns the capped counts and
    the number of redistribution rounds (0 when nothing saturated).
    """
    counts = counts.copy()
    events = 0
    while True:
        excess = counts - populations
        over = excess > 0
        if not over.any():
            return counts, events
        events += 1
        spill = int(excess[over].sum())
        counts[over] = populations[over]
        open_units = counts < populations
        if not open_units.any():
            raise EngineInvariantError("budget exceeds the total population")
        weights = np.where(open_units, probs, 0.0)
        total = weights.sum()
        if total <= 0.0:  # remaining capacity only in zero-probability units
            weights = open_units / open_units.sum()
        else:
            weights = weights / total
        counts += rng.multinomial(spill, weights)


def run_episode(
    config: SimConfig,
    scenario: Scenario,
    strategy_rng: np.random.Generator,
    outcome_rng: np.random.Generator,
) -> SimTrace:
    """Simulate one episode of ``config.horizon`` periods.

    Args:
        config: Run description; ``config.replications`` is ignored here.
        scenario: Per-unit world parameters.
        strategy_rng: Stream for allocation randomness.
        outcome_rng: Stream for test outcomes (shared across strategies for
            paired comparisons).
    """
    pops = scenario.populations
    k = config.units
    horizon = config.horizon
    budgets = config.budgets()
    total_population = int(pops.sum())
    units = [
        disease.UnitDiseaseState(
            population=int(pops[i]),
            initial_cases=float(scenario.initial_cases[i]),
            growth_rate=float(scenario.growth_rates[i]),
            test_effect=config.test_effect,
        )
        for i in range(k)
    ]
    driver = StrategyDriver(config, k)

    tests = np.zeros((horizon, k), dtype=np.int64)
    positives = np.zeros((horizon, k), dtype=np.int64)
    probs = np.zeros((horizon, k))
    cases = np.zeros((horizon + 1, k))
    mu_true = np.zeros(horizon)
    mu_hat = np.zeros(horizon)
    saturation_events = 0

    for t in range(horizon):
        cases_t = np.array([disease.cases_at(u, t) for u in units])
        cases[t] = cases_t
        mu_true[t] = estimation.true_prevalence(cases_t, pops)
        m_t = int(budgets[t])
        if m_t > total_population:
            raise EngineInvariantError("budget exceeds the total population")
        raw = driver.allocate(m_t, strategy_rng)
        capped, events = _cap_and_redistribute(raw.counts, raw.selection_probs, pops, strategy_rng)
        saturation_events += events
        allocation = strategies.Allocation(capped, raw.selection_probs, m_t, raw.probs_exact)
        infected = np.rint(cases_t).astype(np.int64)
        drawn_pos = outcome_rng.hypergeometric(infected, pops - infected, allocation.counts)
        observation = estimation.BatchObservation(
            tests=allocation.counts,
            positives=drawn_pos,
            selection_probs=allocation.selection_probs,
            unit_populations=pops,
        )
        tests[t] = allocation.counts
        positives[t] = observation.positives
        probs[t] = allocation.selection_probs
        mu_hat[t] = estimation.ht_estimate(observation) if m_t >= 1 else math.nan
        units = [disease.record_tests(u, int(c)) for u, c in zip(units, allocation.counts)]
        driver.observe(allocation, observation)

    cases[horizon] = [disease.cases_at(u, horizon) for u in units]
    return SimTrace(
        strategy=config.strategy,
        budgets=budgets,
        tests=tests,
        positives=positives,
        selection_probs=probs,
        cases=cases,
        mu_true=mu_true,
        mu_hat=mu_hat,
        saturation_events=saturation_events,
    )


def run_replication(config: SimConfig, replication: int) -> SimTrace:
    """Run one seeded replication with the paired-stream discipline."""
    scenario = draw_scenario(config, scenario_rng(config, replication))
    strategy_stream, outcome_stream = episode_rngs(config, replication)
    return run_episode(config, scenario, strategy_stream, outcome_stream)


def run_simulation(config: SimConfig) -> list[SimTrace]:
    """All replications of a single-strategy, single-budget run."""
    return [run_replication(config, rep) for rep in range(config.replications)]


def experiment_cell(
    config: SimConfig, strategy: str, budget: int | tuple[int, ...]
) -> np.ndarray:
    """Final total cases per replication for one (strategy, budget) cell."""
    cell = replace(config, strategy=strategy, budget=budget)
    return np.array(
        [run_replication(cell, rep).final_total_cases for rep in range(config.replications)]
    )


def _experiment_cell_task(args: tuple[SimConfig, str, int | tuple[int, ...]]) -> np.ndarray:
    return experiment_cell(*args)


@dataclass(frozen=True)
class ComparisonRow:
    """Improvement of one strategy over the random baseline at one budget."""

    strategy: str
    budget: int
    units: int
    gamma: float
    mean_diff_vs_random: float
    ci68_low: float
    ci68_high: float
    replications: int


def run_experiment(
    config: SimConfig,
    strategy_names: Sequence[str],
    budget_grid: Sequence[int],
    map_fn: Callable[..., Iterable] = map,
) -> list[ComparisonRow]:
    """Paired comparison of strategies against random across budgets.

    For each budget, every strategy (plus the implicit random baseline) runs
    ``config.replications`` paired replications; the row reports the mean
    per-replication difference in final total cases versus random with a 68%
    interval of +/- one standard error.

    Args:
        map_fn: ``map``-compatible callable; pass an executor's ``map`` to
            parallelize over (strategy, budget) cells.
    """
    if not strategy_names:
        raise ConfigError("at least one strategy is required")
    for name in strategy_names:
        if name not in STRATEGY_NAMES:
            raise ConfigError(f"strategy must be one of {STRATEGY_NAMES}")
    ordered = list(dict.fromkeys(["random", *strategy_names]))
    tasks = [(config, name, int(budget)) for budget in budget_grid for name in ordered]
    finals = dict(zip([(t[1], t[2]) for t in tasks], map_fn(_experiment_cell_task, tasks)))
    rows = []
    for budget in budget_grid:
        baseline = finals[("random", int(budget))]
        for name in strategy_names:
            diff = finals[(name, int(budget))] - baseline
            mean = float(diff.mean())
            if diff.size >= 2:
                se = float(diff.std(ddof=1) / math.sqrt(diff.size))
            else:
                se = 0.0
            rows.append(
                ComparisonRow(
                    strategy=name,
                    budget=int(budget),
                    units=config.units,
                    gamma=config.gamma,
                    mean_diff_vs_random=mean,
                    ci68_low=mean - se,
                    ci68_high=mean + se,
                    replications=int(diff.size),
                )
            )
    return rows


def _estimation_cell_task(args: tuple[SimConfig, int | tuple[int, ...]]) -> list[SimTrace]:
    config, budget = args
    return run_simulation(replace(config, budget=budget))


def run_estimation(
    config: SimConfig,
    budget_grid: Sequence[int],
    map_fn: Callable[..., Iterable] = map,
) -> dict[int, list[SimTrace]]:
    """Traces for every budget in the grid, keyed by budget."""
    tasks = [(config, int(budget)) for budget in budget_grid]
    return {int(b): traces for (_, b), traces in zip(tasks, map_fn(_estimation_cell_task, tasks))}


@dataclass(frozen=True)
class EstimationSummary:
    """Per-budget aggregates of estimator behaviour across replications."""

    budgets: tuple[int, ...]
    mean_true: Mapping[int, np.ndarray]  # (T,) mean of mu_t over replications
    band_low: Mapping[int, np.ndarray]  # (T,) min of mu_hat over replications
    band_high: Mapping[int, np.ndarray]  # (T,) max of mu_hat over replications
    errors: Mapping[int, np.ndarray]  # pooled mu_hat - mu_true

    def error_variance(self, budget: int) -> float:
        return float(self.errors[budget].var(ddof=1))


def summarize(traces_by_budget: Mapping[int, Sequence[SimTrace]]) -> EstimationSummary:
    """Aggregate estimate traces into per-period bands and pooled errors."""
    mean_true: dict[int, np.ndarray] = {}
    band_low: dict[int, np.ndarray] = {}
    band_high: dict[int, np.ndarray] = {}
    errors: dict[int, np.ndarray] = {}
    for budget, traces in traces_by_budget.items():
        if not traces:
            raise ValueError("each budget needs at least one trace")
        mu_true = np.stack([tr.mu_true for tr in traces])
        mu_hat = np.stack([tr.mu_hat for tr in traces])
        mean_true[budget] = mu_true.mean(axis=0)
        band_low[budget] = mu_hat.min(axis=0)
        band_high[budget] = mu_hat.max(axis=0)
        errors[budget] = (mu_hat - mu_true).ravel()
    return EstimationSummary(
        budgets=tuple(traces_by_budget),
        mean_true=mean_true,
        band_low=band_low,
        band_high=band_high,
        errors=errors,
    )
