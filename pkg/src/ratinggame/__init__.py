"""Simulation and exact analysis of the sequential online rating game."""
from .errors import EmptyConditionError, ParameterError, ResourceError
from .model import (
    GameParams,
    RatingState,
    SimSummary,
    decide_nonreader,
    decide_reader,
    expected_utility,
    is_dead,
    optimal_action_bayes,
    run_batch,
    run_game,
    update_rating,
)
from .montecarlo import GridResult, GridSpec, Metric, estimate_metric, sweep, trajectory
from .oracle import (
    StateDistribution,
    evolve,
    exact_bias,
    exact_death_probability,
    exact_expected_rating,
    limit_rating,
    rating_bias,
    step_distribution,
)
from .rng import SeedSpec, Stream, bernoulli, derive_stream

__version__ = "0.1.0"
