import itertools

import numpy as np
import pytest

from storage_cournot.best_response import BestResponseProblem, action_order
from storage_cournot.clearing import clear_hour
from storage_cournot.experiments import RunConfig, build_scenario, load_market
from storage_cournot.model import DemandCurve, Scenario, StorageParams
from storage_cournot.synthetic import DATA_DIR


def enumerate_profit(prob):
    """Independent oracle: scan every sequence with a plain SoC recursion."""
    p = prob.player
    best, best_seq = -np.inf, None
    lo, hi = p.terminal_band
    for seq in itertools.product(action_order(p.n_levels), repeat=prob.horizon):
        e, profit, ok = p.initial_soc, 0.0, True
        for t, a in enumerate(seq):
            ch, dis = p.step * max(-a, 0), p.step * max(a, 0)
            e = e + p.eta * ch - dis
            supply = prob.base_supply[t] + dis - ch
            if e < -1e-9 or e > p.e_max + 1e-9 or supply < -1e-9:
                ok = False
                break
            lam = clear_hour(prob.curves[t], supply).price
            profit += dis * (lam - p.oc) - ch * (lam + p.oc)
        if ok and lo - 1e-9 <= e <= hi + 1e-9 and profit > best + 1e-9:
            best, best_seq = profit, seq
    return best, best_seq


def random_curve(rng, n_blocks, hour=1, vmax=60.0):
    prices = np.sort(rng.choice(np.arange(1, 200), n_blocks, replace=False))[::-1].astype(float)
    if rng.random() < 0.2:
        prices[-1] = 0.0
    volumes = np.cumsum(rng.uniform(2.0, vmax / n_blocks, n_blocks)).round(2)
    return DemandCurve(prices, volumes, hour=hour)


def random_player(rng, player_id=1, n_levels=None, eta=None):
    n = int(rng.integers(1, 4)) if n_levels is None else n_levels
    return StorageParams(
        player_id=player_id,
        q_max=float(rng.integers(2, 20)),
        e_max=float(rng.integers(4, 40)),
        eta=float(rng.choice([1.0, 0.9, 0.85, 0.8])) if eta is None else eta,
        oc=float(rng.uniform(0, 4)).__round__(2),
        alpha_batt=0.5,
        epsilon=float(rng.choice([0.0, 0.05, 0.2])),
        n_levels=n,
    )


def random_problem(rng, T, n_levels, n_blocks, rivals=True):
    curves = [random_curve(rng, int(rng.integers(1, n_blocks + 1)), hour=t + 1) for t in range(T)]
    res = rng.uniform(0, 70, T).round(1)
    player = random_player(rng, n_levels=n_levels)
    if rivals:
        ch = rng.choice([0.0, 0.0, 5.0, 10.0], T)
        dis = np.where(ch > 0, 0.0, rng.choice([0.0, 0.0, 4.0, 8.0], T))
    else:
        ch = dis = np.zeros(T)
    return BestResponseProblem(player, curves, res, ch, dis)


def random_scenario(rng, T, n_players, max_blocks=3, max_levels=2):
    curves = [random_curve(rng, int(rng.integers(1, max_blocks + 1)), hour=t + 1) for t in range(T)]
    res = rng.uniform(0, 70, T).round(1)
    players = [random_player(rng, k + 1, n_levels=int(rng.integers(1, max_levels + 1))) for k in range(n_players)]
    return Scenario(curves, res, players)


def bundled_config(season, **overrides):
    cfg = RunConfig.load(DATA_DIR / f"{season}.json")
    return cfg.point(**overrides) if overrides else cfg


_markets = {}


def bundled_market(season):
    if season not in _markets:
        _markets[season] = load_market(bundled_config(season))
    return _markets[season]


def bundled_scenario(season, **overrides):
    cfg = bundled_config(season, **overrides)
    return build_scenario(cfg, bundled_market(season))[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
