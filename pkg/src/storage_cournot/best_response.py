"""Profit-maximizing self-schedule of one storage player against fixed rivals.

Two formulations of the player's MILP are provided:

* ``solve_method1`` -- big-M market logic with product binaries ``w = z * u``
  linking the chosen power level to the active price step;
* ``solve_method2`` -- continuous partial fill ``b`` of the active block,
  with the player's revenue written as market revenue minus the revenue of
  the exogenous supply.

The market variables of one hour depend on nothing but that hour's action,
so both MILPs are solved exactly by dynamic programming over the integer
lattice of cumulative (charge units, discharge units): for every hour and
action the inner market block choice is resolved by checking each
formulation's constraints directly and keeping the best feasible
completion.  ``backend="milp"`` instead hands the full constraint matrix to
HiGHS (see :mod:`storage_cournot.milp`).

Actions are signed offer levels: ``0`` idle, ``-i`` charge at level ``i``,
``+i`` discharge at level ``i``.  Ties are broken towards the
lexicographically smallest action sequence under the ranking
idle < charge levels < discharge levels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .clearing import clear_hour
from .model import (
    DemandCurve,
    GameState,
    Scenario,
    Schedule,
    StorageParams,
    scaled_tol,
)

MAX_ENUMERATION = 10**7


class InfeasibleBestResponse(RuntimeError):
    def __init__(self, player_id, hour=None):
        self.player_id = player_id
        self.hour = hour
        where = f" (no feasible action in hour {hour})" if hour is not None else ""
        super().__init__(f"best response of player {player_id} is infeasible{where}")


def action_order(n_levels: int) -> np.ndarray:
    """Signed levels in tie-break rank order."""
    return np.concatenate(([0], -np.arange(1, n_levels + 1), np.arange(1, n_levels + 1)))


@dataclass(frozen=True, eq=False)
class BestResponseProblem:
    player: StorageParams
    curves: tuple[DemandCurve, ...]
    res: np.ndarray
    exo_charge: np.ndarray
    exo_discharge: np.ndarray
    big_m: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        for name in ("res", "exo_charge", "exo_discharge"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        T = len(self.curves)
        if not len(self.res) == len(self.exo_charge) == len(self.exo_discharge) == T:
            raise ValueError("curves, res and exogenous actions must share the horizon")
        if self.big_m is None:
            vol_d = np.array([c.max_volume for c in self.curves])
            m = vol_d + self.res + self.exo_charge + self.exo_discharge + self.player.q_max
            object.__setattr__(self, "big_m", m)
        else:
            object.__setattr__(self, "big_m", np.asarray(self.big_m, dtype=float))

    @classmethod
    def from_state(cls, scenario: Scenario, state: GameState, index: int) -> "BestResponseProblem":
        ch_o, dis_o = state.exogenous(index, scenario.T)
        fleet = sum(p.q_max for p in scenario.players)
        vol_d = np.array([c.max_volume for c in scenario.curves])
        return cls(
            player=scenario.players[index],
            curves=scenario.curves,
            res=scenario.res,
            exo_charge=ch_o,
            exo_discharge=dis_o,
            big_m=vol_d + scenario.res + fleet,
        )

    @property
    def horizon(self) -> int:
        return len(self.curves)

    @property
    def base_supply(self) -> np.ndarray:
        """Supply before the player acts: RES plus rivals' net discharge."""
        return self.res + self.exo_discharge - self.exo_charge


@dataclass(frozen=True, eq=False)
class BestResponseSolution:
    schedule: Schedule | None
    profit: float
    prices: np.ndarray | None
    status: str  # "optimal" or "infeasible"
    infeasible_hour: int | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def realized_profit(prob: BestResponseProblem, schedule: Schedule) -> tuple[float, np.ndarray]:
    """Profit of ``schedule`` at the prices it actually clears, and those prices."""
    supply = prob.base_supply + schedule.discharge - schedule.charge
    prices = np.array([clear_hour(c, s).price for c, s in zip(prob.curves, supply)])
    oc = prob.player.oc
    profit = np.sum(schedule.discharge * (prices - oc) - schedule.charge * (prices + oc))
    return float(profit), prices


# -- per-hour values of the two formulations ---------------------------------


def _method1_hour(curve: DemandCurve, base: float, level: int, player: StorageParams, m: float) -> float:
    """Best objective of one hour of the big-M model for a fixed action.

    Enumerates the active step ``u_j = 1``, sets the adjacency binaries that
    the remaining steps require, and checks every demand-logic row.
    Returns ``-inf`` if no completion is feasible.
    """
    N, D = player.n_levels, curve.n_blocks
    Q = player.levels
    z_ch, z_dis = np.zeros(N), np.zeros(N)
    if level < 0:
        z_ch[-level - 1] = 1.0
    elif level > 0:
        z_dis[level - 1] = 1.0
    q = base + Q @ z_dis - Q @ z_ch
    vol, vol_prev = curve.volumes, curve.block_starts
    tol = scaled_tol(curve.max_volume, m)
    if q < -tol:
        return -np.inf
    best = -np.inf
    for j in range(D):
        # half-open step ownership: step j > 0 needs q strictly above vol_{j-1}
        if j > 0 and q <= vol_prev[j] + tol:
            continue
        u = np.zeros(D)
        u[j] = 1.0
        up = (q >= vol - tol) * (1.0 - u)
        um = (1.0 - u) * (1.0 - up)
        rows = [
            vol_prev - m * (1 - u) <= q + tol,                 # lower edge of the active step
            q <= vol + m * (1 - u) + tol,                      # upper edge of the active step
            vol - m * (1 - up) <= q + tol,                     # u+ = 1: quantity at or above vol_j
            q <= vol_prev + m * (1 - um) + tol,                # u- = 1: quantity at or below vol_{j-1}
            np.array([q <= vol[-1] + m * u[-1] + tol]),        # last step open to oversupply
            np.array([vol[0] - m * u[0] <= q + tol]),
            np.array([q <= vol[0] + m * (1 - u[0]) + tol]),
        ]
        # the oversupply row supersedes every upper edge of the last step
        rows[1][-1] = True
        if D == 1:
            rows[6][0] = True
        if not all(np.all(r) for r in rows):
            continue
        w_ch = np.outer(z_ch, u)
        w_dis = np.outer(z_dis, u)
        value = np.sum(Q[:, None] * curve.prices[None, :] * (w_dis - w_ch)) - player.oc * (Q @ (z_dis + z_ch))
        best = max(best, float(value))
    return best


def _method2_hour(curve: DemandCurve, base: float, level: int, player: StorageParams) -> float:
    """Best objective of one hour of the continuous-block model for a fixed action.

    Total supply is ``q_min[j] + b[j]`` on the active step (plus curtailment
    beyond the last block).  The objective is the market revenue
    ``sum_j pr_j (u_j q_min_j + b_j)`` less the revenue earned by the
    exogenous supply ``sum_j pr_j u_j * base``, less operating cost.
    """
    N, D = player.n_levels, curve.n_blocks
    qty = player.step * abs(level)
    q = base + (qty if level > 0 else -qty)
    tol = scaled_tol(curve.max_volume)
    if q < -tol:
        return -np.inf
    q_min, q_max, pr = curve.block_starts, curve.block_widths, curve.prices
    best = -np.inf
    for j in range(D):
        rest = q - q_min[j]
        if rest < -tol or (j > 0 and rest <= tol):
            continue
        b = min(max(rest, 0.0), q_max[j])
        curtail = rest - b
        if curtail > tol and j != D - 1:
            continue
        value = pr[j] * (q_min[j] + b) + (pr[j] * curtail if j == D - 1 else 0.0) - pr[j] * base - player.oc * qty
        best = max(best, float(value))
    return best


def hourly_values(prob: BestResponseProblem, method: int) -> np.ndarray:
    """Objective contribution of every (hour, action) pair; ``-inf`` if infeasible."""
    actions = action_order(prob.player.n_levels)
    base = prob.base_supply
    table = np.empty((prob.horizon, len(actions)))
    for t, curve in enumerate(prob.curves):
        for k, a in enumerate(actions):
            if method == 1:
                table[t, k] = _method1_hour(curve, base[t], int(a), prob.player, prob.big_m[t])
            else:
                table[t, k] = _method2_hour(curve, base[t], int(a), prob.player)
    return table


# -- exact lattice dynamic program --------------------------------------------


def _shift(v: np.ndarray, dc: int, dd: int) -> np.ndarray:
    """``out[c, d] = v[c + dc, d + dd]``, ``-inf`` outside the lattice."""
    out = np.full_like(v, -np.inf)
    nc, nd = v.shape
    out[: nc - dc, : nd - dd] = v[dc:, dd:]
    return out


def lattice_solve(player: StorageParams, table: np.ndarray) -> tuple[np.ndarray | None, float, int | None]:
    """Maximize the sum of ``table[t, action]`` over feasible action sequences.

    Returns ``(levels, value, infeasible_hour)``; ``levels`` is ``None`` when
    no sequence meets the SoC bounds and terminal band.
    """
    T, _ = table.shape
    N = player.n_levels
    actions = action_order(N)
    U = T * N
    c = np.arange(U + 1)[:, None]
    d = np.arange(U + 1)[None, :]
    soc = player.initial_soc + player.step * (player.eta * c - d)
    etol = scaled_tol(player.e_max)
    inside = (soc >= -etol) & (soc <= player.e_max + etol)
    lo, hi = player.terminal_band
    V = np.full((T + 1, U + 1, U + 1), -np.inf)
    V[T][inside & (soc >= lo - etol) & (soc <= hi + etol)] = 0.0
    for t in range(T - 1, -1, -1):
        best = np.full((U + 1, U + 1), -np.inf)
        for k, a in enumerate(actions):
            r = table[t, k]
            if not np.isfinite(r):
                continue
            nxt = _shift(V[t + 1], -a if a < 0 else 0, a if a > 0 else 0)
            np.maximum(best, r + nxt, out=best)
        best[~inside] = -np.inf
        V[t] = best

    if not np.isfinite(V[0, 0, 0]):
        dead = np.flatnonzero(~np.isfinite(table).any(axis=1))
        return None, -np.inf, (int(dead[0]) + 1 if len(dead) else None)

    levels = np.zeros(T, dtype=int)
    ci = di = 0
    for t in range(T):
        target = V[t, ci, di]
        vtol = 1e-9 * max(1.0, abs(target))
        for k, a in enumerate(actions):
            r = table[t, k]
            if not np.isfinite(r):
                continue
            nc, nd = ci + max(-a, 0), di + max(a, 0)
            if nc > U or nd > U:
                continue
            if r + V[t + 1, nc, nd] >= target - vtol:
                levels[t] = a
                ci, di = nc, nd
                break
        else:  # pragma: no cover - V[t] was built from these same candidates
            raise RuntimeError("lattice backtracking lost the optimal path")
    return levels, float(V[0, 0, 0]), None


def _solve_lattice(prob: BestResponseProblem, method: int) -> BestResponseSolution:
    table = hourly_values(prob, method)
    levels, _, hour = lattice_solve(prob.player, table)
    if levels is None:
        return BestResponseSolution(None, float("nan"), None, "infeasible", hour)
    schedule = Schedule.from_levels(prob.player, levels)
    profit, prices = realized_profit(prob, schedule)
    return BestResponseSolution(schedule, profit, prices, "optimal")


def solve_method1(prob: BestResponseProblem, backend: str = "lattice") -> BestResponseSolution:
    """Exact optimum of the big-M formulation."""
    if backend == "milp":
        from .milp import solve_method1_milp
        return solve_method1_milp(prob)
    return _solve_lattice(prob, method=1)


def solve_method2(prob: BestResponseProblem, backend: str = "lattice") -> BestResponseSolution:
    """Exact optimum of the continuous-block formulation."""
    if backend == "milp":
        from .milp import solve_method2_milp
        return solve_method2_milp(prob)
    return _solve_lattice(prob, method=2)


def brute_force_best_response(prob: BestResponseProblem) -> BestResponseSolution:
    """Enumerate every action sequence; profit from direct clearing.

    Only usable on small instances, ``(2N+1)^T <= 10^7``.
    """
    player = prob.player
    T = prob.horizon
    actions = action_order(player.n_levels)
    A = len(actions)
    if A**T > MAX_ENUMERATION:
        raise ValueError(f"instance too large to enumerate: {A}^{T} sequences")

    # profit of every (hour, action) at the price its supply clears
    base = prob.base_supply
    hour_profit = np.full((T, A), -np.inf)
    for t, curve in enumerate(prob.curves):
        for k, a in enumerate(actions):
            ch = player.step * max(-a, 0)
            dis = player.step * max(a, 0)
            supply = base[t] + dis - ch
            if supply < -scaled_tol(curve.max_volume):
                continue
            lam = clear_hour(curve, supply).price
            hour_profit[t, k] = dis * (lam - player.oc) - ch * (lam + player.oc)

    # every sequence in lexicographic rank order: row r is the r-th sequence
    idx = np.array(list(itertools.product(range(A), repeat=T)), dtype=np.int64).reshape(-1, T)
    lv = actions[idx]
    charge = player.step * np.maximum(-lv, 0)
    discharge = player.step * np.maximum(lv, 0)
    soc = player.initial_soc + np.cumsum(player.eta * charge - discharge, axis=1)
    etol = scaled_tol(player.e_max)
    lo, hi = player.terminal_band
    ok = np.all((soc >= -etol) & (soc <= player.e_max + etol), axis=1)
    ok &= (soc[:, -1] >= lo - etol) & (soc[:, -1] <= hi + etol)
    total = hour_profit[np.arange(T)[None, :], idx].sum(axis=1)
    total[~ok] = -np.inf
    if not np.isfinite(total).any():
        dead = np.flatnonzero(~np.isfinite(hour_profit).any(axis=1))
        return BestResponseSolution(None, float("nan"), None, "infeasible",
                                    int(dead[0]) + 1 if len(dead) else None)
    best = total.max()
    r = int(np.flatnonzero(total >= best - 1e-9 * max(1.0, abs(best)))[0])
    schedule = Schedule.from_levels(player, lv[r])
    profit, prices = realized_profit(prob, schedule)
    return BestResponseSolution(schedule, profit, prices, "optimal")
