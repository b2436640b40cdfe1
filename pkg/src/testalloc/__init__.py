"""Batched bandit allocation of diagnostic tests over a testing-aware epidemic model."""

__version__ = "0.1.0"

from .disease import UnitDiseaseState, cases_at, lambda_integral, ode_oracle, record_tests
from .engine import SimConfig, SimTrace, run_episode, run_experiment
from .estimation import BatchObservation, ht_estimate, true_prevalence

__all__ = [
    "__version__",
    "UnitDiseaseState",
    "cases_at",
    "lambda_integral",
    "ode_oracle",
    "record_tests",
    "SimConfig",
    "SimTrace",
    "run_episode",
    "run_experiment",
    "BatchObservation",
    "ht_estimate",
    "true_prevalence",
]
