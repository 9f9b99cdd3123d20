"""Social-planner benchmark: joint storage dispatch maximizing total surplus.

Two exact routes:

* a joint dynamic program over every player's state of charge, exact when
  each efficiency is a ratio of small integers (the SoC then lives on an
  integer lattice ``e0 + step * k / den``) and the joint lattice is small;
* the HiGHS MILP of :func:`storage_cournot.milp.solve_planner_milp` for
  larger fleets.

``backend="auto"`` picks the dynamic program whenever it fits the work
budget.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .best_response import action_order
from .clearing import MarketReport, clear_hour, consumer_surplus, hourly_metrics, producer_surplus
from .milp import solve_planner_milp
from .model import GameState, Scenario, Schedule, StorageParams, scaled_tol

log = logging.getLogger(__name__)

#: Upper bound on state-action-hour evaluations for the joint dynamic program.
DP_BUDGET = 2 * 10**9
MAX_DENOMINATOR = 1000


class InfeasiblePlanner(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerSolution:
    schedules: tuple[Schedule, ...]
    outcome: MarketReport
    total_sw: float
    total_cs: float
    total_ps: float
    objective: float  # optimum reported by the solver, before re-clearing
    backend: str = "none"

    @property
    def state(self) -> GameState:
        return GameState(self.schedules)


def _solution(scenario: Scenario, state: GameState, objective: float, backend: str) -> PlannerSolution:
    outcome = hourly_metrics(state, scenario)
    cs, ps = outcome.consumer_surplus, outcome.producer_surplus
    return PlannerSolution(state.schedules, outcome, cs + ps, cs, ps, objective, backend)


# -- joint SoC lattice ----------------------------------------------------------


@dataclass(frozen=True)
class _Lattice:
    """SoC of one player as ``e0 + step * k / den`` with integer ``k``."""

    player: StorageParams
    num: int  # eta = num / den
    den: int
    k_min: int
    k_max: int

    @classmethod
    def build(cls, p: StorageParams) -> "_Lattice | None":
        frac = Fraction(p.eta).limit_denominator(MAX_DENOMINATOR)
        if abs(float(frac) - p.eta) > 1e-15:
            return None
        num, den = frac.numerator, frac.denominator
        if p.step == 0:
            return cls(p, num, den, 0, 0)
        tol = scaled_tol(p.e_max)
        lo = int(np.floor((-p.initial_soc - tol) * den / p.step))
        hi = int(np.ceil((p.e_max - p.initial_soc + tol) * den / p.step))
        return cls(p, num, den, lo, hi)

    @property
    def size(self) -> int:
        return self.k_max - self.k_min + 1

    def soc(self) -> np.ndarray:
        k = np.arange(self.k_min, self.k_max + 1)
        return self.player.initial_soc + self.player.step * k / self.den

    def delta(self, level: int) -> int:
        if self.player.step == 0:
            return 0
        return self.num * -level if level < 0 else -self.den * level


def _shift_axis(v: np.ndarray, axis: int, delta: int) -> np.ndarray:
    """``out[..., k, ...] = v[..., k + delta, ...]``, ``-inf`` off the lattice."""
    out = np.full_like(v, -np.inf)
    n = v.shape[axis]
    if abs(delta) >= n:
        return out
    src = [slice(None)] * v.ndim
    dst = [slice(None)] * v.ndim
    if delta >= 0:
        src[axis], dst[axis] = slice(delta, n), slice(0, n - delta)
    else:
        src[axis], dst[axis] = slice(0, n + delta), slice(-delta, n)
    out[tuple(dst)] = v[tuple(src)]
    return out


def _hour_welfare(scenario: Scenario, t: int, levels: tuple[int, ...]) -> float:
    curve = scenario.curves[t]
    ch = [p.step * max(-a, 0) for p, a in zip(scenario.players, levels)]
    dis = [p.step * max(a, 0) for p, a in zip(scenario.players, levels)]
    supply = scenario.res[t] + sum(dis) - sum(ch)
    if supply < -scaled_tol(curve.max_volume):
        return -np.inf
    r = clear_hour(curve, supply)
    ocs = [p.oc for p in scenario.players]
    return consumer_surplus(curve, r) + producer_surplus(r, ch, dis, float(scenario.res[t]), ocs)


def dp_work(scenario: Scenario) -> float | None:
    """State-action-hour count of the joint dynamic program, or None if inapplicable."""
    lattices = [_Lattice.build(p) for p in scenario.players]
    if any(lat is None for lat in lattices):
        return None
    states = float(np.prod([lat.size for lat in lattices]))
    actions = float(np.prod([2 * p.n_levels + 1 for p in scenario.players]))
    return states * actions * scenario.T


def _solve_dp(scenario: Scenario) -> tuple[list[np.ndarray], float]:
    players = scenario.players
    T, P = scenario.T, len(players)
    lats = [_Lattice.build(p) for p in players]
    shape = tuple(lat.size for lat in lats)
    joint = list(itertools.product(*(action_order(p.n_levels) for p in players)))
    reward = np.array([[_hour_welfare(scenario, t, a) for a in joint] for t in range(T)])

    inside = np.ones(shape, dtype=bool)
    terminal = np.ones(shape, dtype=bool)
    for axis, lat in enumerate(lats):
        soc = lat.soc()
        tol = scaled_tol(lat.player.e_max)
        lo, hi = lat.player.terminal_band
        view = [None] * P
        view[axis] = slice(None)
        inside &= ((soc >= -tol) & (soc <= lat.player.e_max + tol))[tuple(view)]
        terminal &= ((soc >= lo - tol) & (soc <= hi + tol))[tuple(view)]

    deltas = [tuple(lat.delta(int(x)) for lat, x in zip(lats, a)) for a in joint]
    V = [None] * (T + 1)
    V[T] = np.where(inside & terminal, 0.0, -np.inf)
    for t in range(T - 1, -1, -1):
        best = np.full(shape, -np.inf)
        cache: dict[tuple[int, ...], np.ndarray] = {}
        for a, dl in enumerate(deltas):
            r = reward[t, a]
            if not np.isfinite(r):
                continue
            # reuse the shift of all but the last axis across the last player's actions
            head = dl[:-1]
            if head not in cache:
                w = V[t + 1]
                for axis, d in enumerate(head):
                    if d:
                        w = _shift_axis(w, axis, d)
                cache[head] = w
            shifted = _shift_axis(cache[head], P - 1, dl[-1]) if dl[-1] else cache[head]
            np.maximum(best, r + shifted, out=best)
        best[~inside] = -np.inf
        V[t] = best

    start = tuple(-lat.k_min for lat in lats)
    if not np.isfinite(V[0][start]):
        raise InfeasiblePlanner("no joint schedule meets every storage constraint")
    levels = np.zeros((P, T), dtype=int)
    k = list(start)
    for t in range(T):
        target = V[t][tuple(k)]
        vtol = 1e-9 * max(1.0, abs(target))
        for a, dl in enumerate(deltas):
            r = reward[t, a]
            if not np.isfinite(r):
                continue
            nk = [ki + d for ki, d in zip(k, dl)]
            if any(not 0 <= x < n for x, n in zip(nk, shape)):
                continue
            if r + V[t + 1][tuple(nk)] >= target - vtol:
                levels[:, t] = joint[a]
                k = nk
                break
        else:  # pragma: no cover
            raise RuntimeError("planner backtracking lost the optimal path")
    return list(levels), float(V[0][start])


def solve_planner(scenario: Scenario, backend: str = "auto") -> PlannerSolution:
    """Exact welfare-maximizing joint schedule.

    Totals are recomputed by clearing the returned schedules, so they obey
    exactly the same market rules as any strategic outcome.
    """
    if not scenario.players:
        return _solution(scenario, scenario.idle_state(), float("nan"), "none")
    if backend == "auto":
        work = dp_work(scenario)
        backend = "dp" if work is not None and work <= DP_BUDGET else "milp"
    if backend == "dp":
        levels, objective = _solve_dp(scenario)
    elif backend == "milp":
        found = solve_planner_milp(scenario, time_limit=scenario.options.time_limit)
        if found is None:
            raise InfeasiblePlanner("no joint schedule meets every storage constraint")
        levels, objective = found
    else:
        raise ValueError(f"unknown planner backend {backend!r}")
    state = GameState(tuple(Schedule.from_levels(p, lv) for p, lv in zip(scenario.players, levels)))
    return _solution(scenario, state, objective, backend)


def brute_force_planner(scenario: Scenario, limit: int = 10**6) -> PlannerSolution:
    """Enumerate every joint schedule; for tiny test instances only."""
    T = scenario.T
    per_player = []
    for p in scenario.players:
        feasible = []
        for seq in itertools.product(action_order(p.n_levels), repeat=T):
            s = Schedule.from_levels(p, seq)
            if not s.violations(p):
                feasible.append(s)
        per_player.append(feasible)
    total = int(np.prod([len(f) for f in per_player])) if per_player else 1
    if total > limit:
        raise ValueError(f"{total} joint schedules exceed the enumeration limit")
    best, best_sw = None, -np.inf
    for combo in itertools.product(*per_player):
        state = GameState(combo)
        supply = scenario.res + state.total_discharge(T) - state.total_charge(T)
        if np.any(supply < -1e-9):
            continue
        sw = hourly_metrics(state, scenario).social_welfare
        if sw > best_sw + 1e-9:
            best, best_sw = state, sw
    if best is None:
        raise InfeasiblePlanner("no joint schedule meets every storage constraint")
    return _solution(scenario, best, best_sw, "enumeration")


def planner_dominance_check(scenario: Scenario, state: GameState, planner: PlannerSolution | None = None) -> float:
    """Welfare the planner achieves beyond ``state`` (non-negative up to tolerance)."""
    planner = solve_planner(scenario) if planner is None else planner
    return planner.total_sw - hourly_metrics(state, scenario).social_welfare
