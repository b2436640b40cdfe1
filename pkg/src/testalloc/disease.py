"""Logistic case growth in a closed population with a testing brake.

Each population unit carries its own copy of the growth law

    dC/dt = alpha * C * (1 - beta * phi(t) - C / N),

where N is the unit's population, alpha the intrinsic growth rate, beta the
per-test damping coefficient, and phi(t) the number of tests administered
during the period [floor(t), floor(t) + 1).  Because phi is constant on each
unit interval, the equation is a Bernoulli ODE with the exact solution

    C(t) = C(0) * N * lam(t) / (N + C(0) * alpha * int_0^t lam(x) dx),
    lam(x) = exp(alpha * (x - beta * Phi(x))),

with Phi the running integral of the testing rate: piecewise linear, equal to
the prefix sum of the schedule at whole steps.  ``cases_at`` evaluates the
closed form; ``ode_oracle`` integrates the ODE numerically with classic RK4
and exists purely as an independent cross-check for tests.

States are immutable; administering tests yields a new state via
``record_tests``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "HorizonError",
    "UnitDiseaseState",
    "cases_at",
    "lambda_integral",
    "ode_oracle",
    "record_tests",
]


class HorizonError(ValueError):
    """Evaluation time lies beyond the recorded test schedule."""


@dataclass(frozen=True)
class UnitDiseaseState:
    """Growth parameters and test history for a single population unit.

    Attributes:
        population: Unit population N (positive integer).
        initial_cases: C(0), in (0, population].
        growth_rate: Intrinsic logistic rate alpha > 0.
        test_effect: Per-test growth damping beta >= 0.
        tests_per_step: tests_per_step[tau] tests were administered during
            [tau, tau + 1).  The schedule bounds the evaluation horizon.
    """

    population: int
    initial_cases: float
    growth_rate: float
    test_effect: float = 0.0
    tests_per_step: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.population < 1 or int(self.population) != self.population:
            raise ValueError("population must be a positive integer")
        if not 0.0 < self.initial_cases <= self.population:
            raise ValueError("initial_cases must lie in (0, population]")
        if self.growth_rate <= 0.0:
            raise ValueError("growth_rate must be positive")
        if self.test_effect < 0.0:
            raise ValueError("test_effect must be non-negative")
        schedule = tuple(int(c) for c in self.tests_per_step)
        if any(c < 0 for c in schedule) or any(
            c != raw for c, raw in zip(schedule, self.tests_per_step)
        ):
            raise ValueError("tests_per_step entries must be non-negative integers")
        object.__setattr__(self, "tests_per_step", schedule)

    @property
    def horizon(self) -> int:
        """Largest time at which the state can be evaluated."""
        return len(self.tests_per_step)


def record_tests(state: UnitDiseaseState, count: int) -> UnitDiseaseState:
    """Return a new state with one more period of testing appended.

    Args:
        state: Current unit state with history of length ``tau``.
        count: Tests administered during [tau, tau + 1); non-negative integer.
    """
    if count < 0 or int(count) != count:
        raise ValueError("count must be a non-negative integer")
    return replace(state, tests_per_step=state.tests_per_step + (int(count),))


def _exp_integral(z: float, width: float) -> float:
    # int_0^width exp(z*s) ds, stable as z -> 0.
    if z == 0.0:
        return width
    return math.expm1(z * width) / z


def _check_time(state: UnitDiseaseState, t: float) -> None:
    if t < 0.0:
        raise ValueError("t must be non-negative")
    if t > state.horizon:
        raise HorizonError(
            f"t={t} exceeds the recorded schedule (horizon {state.horizon}); "
            "append periods with record_tests first"
        )


def _growth_terms(state: UnitDiseaseState, t: float) -> tuple[float, float]:
    """Integrating factor lam(t) and int_0^t lam(x) dx in a single pass.

    lam(x) = exp(alpha * (x - beta * Phi(x))) with Phi piecewise linear, so on
    [tau, tau+1) the log of lam is affine with slope alpha*(1 - beta*phi_tau)
    and each interval contributes a closed-form exponential integral.
    """
    _check_time(state, t)
    alpha = state.growth_rate
    beta = state.test_effect
    whole = int(math.floor(t))
    frac = t - whole
    log_lam = 0.0  # log lam at the start of the current interval
    integral = 0.0
    for tau in range(whole):
        slope = alpha * (1.0 - beta * state.tests_per_step[tau])
        integral += math.exp(log_lam) * _exp_integral(slope, 1.0)
        log_lam += slope
    if frac > 0.0:
        slope = alpha * (1.0 - beta * state.tests_per_step[whole])
        integral += math.exp(log_lam) * _exp_integral(slope, frac)
        log_lam += slope * frac
    return math.exp(log_lam), integral


def lambda_integral(state: UnitDiseaseState, t: float) -> float:
    """int_0^t exp(alpha * (x - beta * Phi(x))) dx for this unit's schedule."""
    return _growth_terms(state, t)[1]


def cases_at(state: UnitDiseaseState, t: float) -> float:
    """Case count C(t) from the exact Bernoulli solution, clamped to [0, N].

    Args:
        state: Unit whose schedule covers every whole step below ``t``.
        t: Evaluation time, 0 <= t <= state.horizon.

    Raises:
        HorizonError: If ``t`` lies beyond the recorded schedule.
    """
    if t == 0.0:
        return float(state.initial_cases)
    lam, integral = _growth_terms(state, t)
    n = float(state.population)
    c0 = state.initial_cases
    value = c0 * n * lam / (n + c0 * state.growth_rate * integral)
    return min(max(value, 0.0), n)


def ode_oracle(state: UnitDiseaseState, t: float, step: float = 1e-4) -> float:
    """Fixed-step RK4 integration of the growth ODE; reference for tests.

    Integrates interval by interval so steps never straddle a change in the
    testing rate.  Deliberately independent of the closed form in
    ``cases_at``.

    Args:
        state: Unit to integrate.
        t: End time, 0 <= t <= state.horizon.
        step: Step size bound, in (0, 0.01].
    """
    if not 0.0 < step <= 0.01:
        raise ValueError("step must lie in (0, 0.01]")
    _check_time(state, t)
    alpha = state.growth_rate
    beta = state.test_effect
    inv_n = 1.0 / state.population
    c = float(state.initial_cases)
    whole = int(math.floor(t))
    spans = [(tau, 1.0) for tau in range(whole)]
    if t - whole > 0.0:
        spans.append((whole, t - whole))
    for tau, span in spans:
        r = 1.0 - beta * state.tests_per_step[tau]
        n_steps = max(1, math.ceil(span / step))
        h = span / n_steps
        for _ in range(n_steps):
            k1 = alpha * c * (r - c * inv_n)
            c2 = c + 0.5 * h * k1
            k2 = alpha * c2 * (r - c2 * inv_n)
            c3 = c + 0.5 * h * k2
            k3 = alpha * c3 * (r - c3 * inv_n)
            c4 = c + h * k3
            k4 = alpha * c4 * (r - c4 * inv_n)
            c += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return min(max(c, 0.0), float(state.population))
