"""Iterative Nash-equilibrium search by sequential (Gauss-Seidel) best responses."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .best_response import (
    BestResponseProblem,
    InfeasibleBestResponse,
    solve_method2,
)
from .clearing import MarketReport, hourly_metrics, player_profits
from .model import GameState, Scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EquilibriumReport:
    final_state: GameState
    iterations: int
    converged: bool
    cycle_length: int
    per_player_profit: np.ndarray
    outcome: MarketReport
    history: tuple[GameState, ...] = ()


def best_response(scenario: Scenario, state: GameState, index: int, backend: str = "lattice"):
    prob = BestResponseProblem.from_state(scenario, state, index)
    sol = solve_method2(prob, backend=backend)
    if not sol.optimal:
        raise InfeasibleBestResponse(scenario.players[index].player_id, sol.infeasible_hour)
    return sol


def _update_order(scenario: Scenario) -> list[int]:
    if scenario.options.order is None:
        return sorted(range(len(scenario.players)), key=lambda k: scenario.players[k].player_id)
    return [scenario.player_index(pid) for pid in scenario.options.order]


def find_nash(scenario: Scenario, tolerance: float | None = None, backend: str = "lattice") -> EquilibriumReport:
    """Search for a pure-strategy Nash equilibrium.

    Every player first best-responds to idle rivals.  Each following sweep
    lets the players, in update order, best-respond to the latest schedules
    of everyone else.  The search stops as soon as a sweep reproduces a
    state already seen: the immediately preceding state is a fixed point
    (an equilibrium); an older one means the dynamics cycle.  On a cycle the
    highest-welfare state of the cycle is reported.
    """
    tolerance = scenario.options.tolerance if tolerance is None else tolerance
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    idle = scenario.idle_state()
    order = _update_order(scenario)
    if not scenario.players:
        outcome = hourly_metrics(idle, scenario)
        return EquilibriumReport(idle, 0, True, 0, np.zeros(0), outcome, (idle,))

    state = idle
    for k in order:
        state = state.replace(k, best_response(scenario, idle, k, backend).schedule)

    history = [state]
    seen = {state.key(): 0}
    converged, cycle_length, sweeps = False, 0, 0
    while sweeps < scenario.options.max_sweeps:
        for k in order:
            state = state.replace(k, best_response(scenario, state, k, backend).schedule)
        sweeps += 1
        key = state.key()
        if key in seen:
            first = seen[key]
            cycle_length = len(history) - first
            converged = cycle_length == 1
            break
        seen[key] = len(history)
        history.append(state)
        log.debug("sweep %d: new state", sweeps)

    final = state
    if cycle_length > 1:
        cycle = history[len(history) - cycle_length:]
        welfare = [hourly_metrics(s, scenario).social_welfare for s in cycle]
        final = cycle[int(np.argmax(welfare))]
        log.info("best responses cycle with length %d", cycle_length)
    outcome = hourly_metrics(final, scenario)
    profits = player_profits(final, scenario, outcome.prices)
    if converged:
        gaps = verify_nash(final, scenario)
        if np.max(gaps) > tolerance:
            raise RuntimeError(f"fixed point fails certification: max improvement {np.max(gaps):g}")
    return EquilibriumReport(final, sweeps, converged, cycle_length, profits, outcome, tuple(history))


def verify_nash(state: GameState, scenario: Scenario, backend: str = "lattice") -> np.ndarray:
    """Largest profit gain each player can get by deviating alone."""
    current = player_profits(state, scenario)
    gains = np.empty(len(scenario.players))
    for k in range(len(scenario.players)):
        sol = best_response(scenario, state, k, backend)
        gains[k] = sol.profit - current[k]
    return gains


def is_nash(state: GameState, scenario: Scenario, tolerance: float = 1e-6) -> bool:
    return bool(np.all(verify_nash(state, scenario) <= tolerance))
