"""Explicit MILP formulations solved with HiGHS (via ``scipy.optimize.milp``).

Each builder lays out the full constraint matrix of a formulation: the
big-M player model, the continuous-block player model, and the social
planner's joint dispatch.  Breakpoint ties (total supply exactly on a
cumulative volume) are left to the solver here; the lattice solvers in
:mod:`storage_cournot.best_response` resolve them by the half-open rule.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from .model import Schedule, StorageParams


class MilpError(RuntimeError):
    pass


class _Model:
    """Tiny sparse row builder: variables are named blocks of columns."""

    def __init__(self):
        self.n = 0
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integer: list[int] = []
        self.rows: list[tuple[dict[int, float], float, float]] = []

    def add(self, shape, lb=0.0, ub=1.0, integer=True) -> np.ndarray:
        size = int(np.prod(shape))
        idx = np.arange(self.n, self.n + size).reshape(shape)
        self.n += size
        lb_arr = np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel()
        ub_arr = np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel()
        self.lb.extend(lb_arr)
        self.ub.extend(ub_arr)
        self.integer.extend([1 if integer else 0] * size)
        return idx

    def row(self, coefs: dict[int, float], lo=-np.inf, hi=np.inf):
        self.rows.append((coefs, lo, hi))

    def solve(self, c: np.ndarray, time_limit=None):
        ri, ci, vals = [], [], []
        lo = np.empty(len(self.rows))
        hi = np.empty(len(self.rows))
        for r, (coefs, l, h) in enumerate(self.rows):
            ri.extend([r] * len(coefs))
            ci.extend(coefs.keys())
            vals.extend(coefs.values())
            lo[r], hi[r] = l, h
        A = coo_matrix((vals, (ri, ci)), shape=(len(self.rows), self.n))
        options = {"mip_rel_gap": 0.0, "presolve": True}
        if time_limit is not None:
            options["time_limit"] = float(time_limit)
        cons = [LinearConstraint(A.tocsr(), lo, hi)] if self.rows else []
        return milp(
            c,
            constraints=cons,
            integrality=np.array(self.integer),
            bounds=Bounds(np.array(self.lb), np.array(self.ub)),
            options=options,
        )


def _merge(*parts: dict[int, float]) -> dict[int, float]:
    out: dict[int, float] = {}
    for part in parts:
        for k, v in part.items():
            out[k] = out.get(k, 0.0) + v
    return out


def _storage_block(model: _Model, player: StorageParams, T: int):
    """Level binaries and the battery rows shared by every formulation.

    Returns ``(zc, zd, net)`` where ``net[t]`` maps column -> coefficient of
    the player's net discharge in hour ``t``.
    """
    N = player.n_levels
    Q = player.levels
    zc = model.add((T, N))
    zd = model.add((T, N))
    lo_T, hi_T = player.terminal_band
    e0 = player.initial_soc
    soc: dict[int, float] = {}
    net = []
    for t in range(T):
        model.row({**{int(k): 1.0 for k in zc[t]}, **{int(k): 1.0 for k in zd[t]}}, hi=1.0)
        for i in range(N):
            soc[int(zc[t, i])] = player.eta * Q[i]
            soc[int(zd[t, i])] = -Q[i]
        lo, hi = -e0, player.e_max - e0
        if t == T - 1:
            lo, hi = max(lo, lo_T - e0), min(hi, hi_T - e0)
        model.row(dict(soc), lo=lo - 1e-9, hi=hi + 1e-9)
        net.append(_merge({int(zd[t, i]): Q[i] for i in range(N)}, {int(zc[t, i]): -Q[i] for i in range(N)}))
    return zc, zd, net


def _levels_from(x: np.ndarray, zc: np.ndarray, zd: np.ndarray) -> np.ndarray:
    T, N = zc.shape
    levels = np.zeros(T, dtype=int)
    for t in range(T):
        ch = x[zc[t]] > 0.5
        dis = x[zd[t]] > 0.5
        if ch.any():
            levels[t] = -(int(np.argmax(ch)) + 1)
        elif dis.any():
            levels[t] = int(np.argmax(dis)) + 1
    return levels


def _check(res, what: str):
    if res.status == 2:
        return False
    if res.status != 0 or res.x is None:
        raise MilpError(f"{what}: HiGHS status {res.status} ({res.message})")
    return True


def _player_solution(prob, res, zc, zd):
    from .best_response import BestResponseSolution, realized_profit

    if not _check(res, f"player {prob.player.player_id}"):
        return BestResponseSolution(None, float("nan"), None, "infeasible")
    schedule = Schedule.from_levels(prob.player, _levels_from(res.x, zc, zd))
    profit, prices = realized_profit(prob, schedule)
    return BestResponseSolution(schedule, profit, prices, "optimal")


def solve_method1_milp(prob):
    """Big-M player model with product binaries ``w = z u``."""
    p = prob.player
    T, N = prob.horizon, p.n_levels
    Q = p.levels
    model = _Model()
    zc, zd, net = _storage_block(model, p, T)
    obj: dict[int, float] = {}
    base = prob.base_supply
    for t, curve in enumerate(prob.curves):
        D = curve.n_blocks
        vol, vol_prev, pr = curve.volumes, curve.block_starts, curve.prices
        M = float(prob.big_m[t])
        u = model.add(D)
        up = model.add(D)
        um = model.add(D)
        wc = model.add((N, D))
        wd = model.add((N, D))
        q = net[t]  # q_tot = base[t] + q
        b = base[t]
        model.row({int(k): 1.0 for k in u}, 1.0, 1.0)
        model.row(dict(q), lo=-b)  # supply cannot go negative
        for i in range(N):
            for j in range(D):
                for w, z in ((wc, zc), (wd, zd)):
                    model.row({int(w[i, j]): 1.0, int(z[t, i]): -1.0}, hi=0.0)
                    model.row({int(w[i, j]): 1.0, int(u[j]): -1.0}, hi=0.0)
                    model.row({int(z[t, i]): 1.0, int(u[j]): 1.0, int(w[i, j]): -1.0}, hi=1.0)
                obj[int(wd[i, j])] = obj.get(int(wd[i, j]), 0.0) + Q[i] * pr[j]
                obj[int(wc[i, j])] = obj.get(int(wc[i, j]), 0.0) - Q[i] * pr[j]
        for j in range(D):
            model.row(_merge(q, {int(u[j]): -M}), lo=vol_prev[j] - M - b)
            if j < D - 1:
                model.row(_merge(q, {int(u[j]): M}), hi=vol[j] + M - b)
            model.row(_merge(q, {int(up[j]): -M}), lo=vol[j] - M - b)
            model.row(_merge(q, {int(um[j]): M}), hi=vol_prev[j] + M - b)
            model.row({int(u[j]): 1.0, int(up[j]): 1.0, int(um[j]): 1.0}, 1.0, 1.0)
        model.row(_merge(q, {int(u[-1]): -M}), hi=vol[-1] - b)
        model.row(_merge(q, {int(u[0]): M}), lo=vol[0] - b)
        if D > 1:  # a single step is also the last one, open to oversupply
            model.row(_merge(q, {int(u[0]): M}), hi=vol[0] + M - b)
        for i in range(N):
            obj[int(zc[t, i])] = obj.get(int(zc[t, i]), 0.0) - p.oc * Q[i]
            obj[int(zd[t, i])] = obj.get(int(zd[t, i]), 0.0) - p.oc * Q[i]
    c = np.zeros(model.n)
    for k, v in obj.items():
        c[k] = -v
    return _player_solution(prob, model.solve(c), zc, zd)


def solve_method2_milp(prob):
    """Continuous-block player model (no big-M, no product binaries)."""
    p = prob.player
    T, N = prob.horizon, p.n_levels
    Q = p.levels
    model = _Model()
    zc, zd, net = _storage_block(model, p, T)
    obj: dict[int, float] = {}
    base = prob.base_supply
    for t, curve in enumerate(prob.curves):
        D = curve.n_blocks
        q_min, q_max, pr = curve.block_starts, curve.block_widths, curve.prices
        u = model.add(D)
        b = model.add(D, lb=0.0, ub=q_max, integer=False)
        cur = model.add(1, lb=0.0, ub=float(prob.big_m[t]), integer=False)[0]
        model.row({int(k): 1.0 for k in u}, 1.0, 1.0)
        for j in range(D):
            model.row({int(b[j]): 1.0, int(u[j]): -q_max[j]}, hi=0.0)
        model.row({int(cur): 1.0, int(u[-1]): -float(prob.big_m[t])}, hi=0.0)
        balance = _merge(net[t], {int(u[j]): -q_min[j] for j in range(D)},
                         {int(b[j]): -1.0 for j in range(D)}, {int(cur): -1.0})
        model.row(balance, -base[t], -base[t])
        for j in range(D):
            obj[int(u[j])] = pr[j] * q_min[j] - pr[j] * base[t]
            obj[int(b[j])] = pr[j]
        obj[int(cur)] = pr[-1]
        for i in range(N):
            obj[int(zc[t, i])] = -p.oc * Q[i]
            obj[int(zd[t, i])] = -p.oc * Q[i]
    c = np.zeros(model.n)
    for k, v in obj.items():
        c[k] = -v
    return _player_solution(prob, model.solve(c), zc, zd)


def solve_planner_milp(scenario, time_limit=None, formulation="envelope"):
    """Joint dispatch maximizing consumer plus producer surplus.

    Returns ``(levels per player, objective)`` or ``None`` if infeasible.

    ``formulation="blocks"`` is the step-selection model: one binary ``u_j``
    per hour picks the active step, producer surplus is delivered-energy
    revenue ``sum_j pr_j (u_j q_min_j + b_j)`` net of operating cost and
    consumer surplus is ``sum_{k<D} (pr_k - pr_{k+1}) vol_k y_k`` with
    ``y_k = sum_{m>k} u_m`` substituted into the objective.

    ``formulation="envelope"`` (default) uses that their sum is the area
    under the demand curve up to the delivered quantity, a concave
    piecewise-linear function of supply.  Blocks are then filled by
    continuous variables in price order without any step binaries; only
    the storage levels stay integer.  Both give the same optimum.
    """
    if formulation not in ("envelope", "blocks"):
        raise ValueError(f"unknown planner formulation {formulation!r}")
    T = scenario.T
    model = _Model()
    blocks = [_storage_block(model, p, T) for p in scenario.players]
    obj: dict[int, float] = {}
    fleet = sum(p.q_max for p in scenario.players)
    for t, curve in enumerate(scenario.curves):
        D = curve.n_blocks
        q_min, q_max, pr, vol = curve.block_starts, curve.block_widths, curve.prices, curve.volumes
        M = float(curve.max_volume + scenario.res[t] + fleet)
        b = model.add(D, lb=0.0, ub=q_max, integer=False)
        cur = model.add(1, lb=0.0, ub=M, integer=False)[0]
        net = _merge(*(blk[2][t] for blk in blocks)) if blocks else {}
        res_t = float(scenario.res[t])
        if formulation == "blocks":
            u = model.add(D)
            model.row({int(k): 1.0 for k in u}, 1.0, 1.0)
            for j in range(D):
                model.row({int(b[j]): 1.0, int(u[j]): -q_max[j]}, hi=0.0)
            model.row({int(cur): 1.0, int(u[-1]): -M}, hi=0.0)
            balance = _merge(net, {int(u[j]): -q_min[j] for j in range(D)},
                             {int(b[j]): -1.0 for j in range(D)}, {int(cur): -1.0})
            cs_coef = np.concatenate(([0.0], np.cumsum((pr[:-1] - pr[1:]) * vol[:-1])))
            for j in range(D):
                obj[int(u[j])] = pr[j] * q_min[j] + cs_coef[j]
                obj[int(b[j])] = pr[j]
        else:
            balance = _merge(net, {int(b[j]): -1.0 for j in range(D)}, {int(cur): -1.0})
            for j in range(D):
                obj[int(b[j])] = pr[j]
        model.row(balance, -res_t, -res_t)
        for p, (zc, zd, _) in zip(scenario.players, blocks):
            for i in range(p.n_levels):
                obj[int(zc[t, i])] = -p.oc * p.levels[i]
                obj[int(zd[t, i])] = -p.oc * p.levels[i]
    c = np.zeros(model.n)
    for k, v in obj.items():
        c[k] = -v
    res = model.solve(c, time_limit=time_limit)
    if not _check(res, "planner"):
        return None
    levels = [_levels_from(res.x, zc, zd) for zc, zd, _ in blocks]
    return levels, -float(res.fun)
