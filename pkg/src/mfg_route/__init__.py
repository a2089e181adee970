"""Mean-field equilibria of road-traffic games under a log-population tax."""

from .equilibrium import (
    DeviationReport,
    best_response,
    deviation_cost,
    epsilon_gap,
    equilibrium,
    indifference_check,
    limit_tax_table,
)
from .estimator import MeanFieldRouting
from .game import GameSpec, TrafficGraph, game_to_dict, policy_rows_check, validate_game
from .gridworld import GridScenario, build_grid_game, run_figure_experiment
from .population import (
    PopulationSample,
    convergence_curve,
    expected_tax_poisson_binomial,
    expected_tax_symmetric,
    sample_population,
)
from .propagation import push_forward, trajectory
from .solver import backward_phi, kl_objective, optimal_policy, value_at

__version__ = "0.1.0"

__all__ = [
    "DeviationReport", "GameSpec", "GridScenario", "MeanFieldRouting", "PopulationSample",
    "TrafficGraph", "backward_phi", "best_response", "build_grid_game", "convergence_curve",
    "deviation_cost", "epsilon_gap", "equilibrium", "expected_tax_poisson_binomial",
    "expected_tax_symmetric", "game_to_dict", "indifference_check", "kl_objective",
    "limit_tax_table", "optimal_policy", "policy_rows_check", "push_forward",
    "run_figure_experiment", "sample_population", "trajectory", "validate_game", "value_at",
]
