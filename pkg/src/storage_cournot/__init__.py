"""Strategic energy-storage players in a uniform-price day-ahead market.

Storage operators choose discrete hourly charge/discharge offers, the
market clears against stepwise demand curves, and equilibria are found
by sequential best responses.  A welfare-maximizing planner provides the
benchmark.
"""

from .best_response import (
    BestResponseProblem,
    BestResponseSolution,
    InfeasibleBestResponse,
    brute_force_best_response,
    solve_method1,
    solve_method2,
)
from .clearing import MarketReport, clear_hour, consumer_surplus, hourly_metrics, player_profits, producer_surplus
from .equilibrium import EquilibriumReport, find_nash, is_nash, verify_nash
from .model import (
    DemandCurve,
    GameState,
    MarketOutcome,
    Scenario,
    Schedule,
    SolverOptions,
    StorageParams,
    net_supply,
    validate_scenario,
)
from .planner import InfeasiblePlanner, PlannerSolution, planner_dominance_check, solve_planner
from .sizing import apply_theta, partition_players, required_capacity, residual_demand, size_fleet

__version__ = "0.1.0"
