"""Storage requirements derived from residual demand."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import StorageParams

#: Asymmetric capacity shares by number of players.
DEFAULT_SHARES = {
    1: (1.0,),
    2: (1 / 3, 2 / 3),
    4: (0.1, 0.2, 0.3, 0.4),
    6: (0.05, 0.10, 0.10, 0.15, 0.25, 0.35),
    8: (0.05, 0.05, 0.10, 0.10, 0.10, 0.15, 0.20, 0.25),
}


def shares_for(n: int) -> tuple[float, ...]:
    """Default shares for ``n`` players; equal shares when no preset exists."""
    if n < 0:
        raise ValueError("number of players must be non-negative")
    if n == 0:
        return ()
    return DEFAULT_SHARES.get(n, tuple([1.0 / n] * n))


@dataclass(frozen=True)
class SizingResult:
    residual: np.ndarray
    corrected: np.ndarray
    cumulative: np.ndarray
    level: np.ndarray
    e_max: float
    q_max: float
    per_player: tuple[StorageParams, ...] = ()


def residual_demand(demand, res) -> np.ndarray:
    demand = np.asarray(demand, dtype=float)
    res = np.asarray(res, dtype=float)
    if demand.shape != res.shape:
        raise ValueError(f"length mismatch: demand {demand.shape}, res {res.shape}")
    return demand - res


def required_capacity(residual, eta: float, c_rate: float) -> SizingResult:
    """Energy capacity covering the largest cumulative deficit excursion.

    Deficits are grossed up by ``1/eta``; the storage level is the running
    cumulative residual measured from its lowest point so far.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if not c_rate > 0:
        raise ValueError("c_rate must be positive")
    r = np.asarray(residual, dtype=float)
    corrected = np.where(r > 0, r / eta, r)
    cumulative = np.cumsum(corrected)
    level = cumulative - np.minimum.accumulate(cumulative)
    e_max = float(level.max()) if len(level) else 0.0
    q_max = float(math.ceil(c_rate * e_max))
    return SizingResult(r, corrected, cumulative, level, e_max, q_max)


def partition_players(
    e_max: float,
    q_max: float,
    shares,
    n_levels: int,
    eta: float = 1.0,
    oc: float = 0.0,
    alpha_batt: float = 0.5,
    epsilon: float = 0.05,
) -> list[StorageParams]:
    """Split aggregate capacity by fixed shares; player ids start at 1.

    Power is floored to whole MW with at least 1 MW per player.
    """
    shares = [float(w) for w in shares]
    if not shares:
        raise ValueError("shares must not be empty")
    if any(w <= 0 for w in shares) or abs(sum(shares) - 1.0) > 1e-9:
        raise ValueError("shares must be positive and sum to 1")
    return [
        StorageParams(
            player_id=k,
            q_max=float(max(1, math.floor(w * q_max))),
            e_max=w * e_max,
            eta=eta,
            oc=oc,
            alpha_batt=alpha_batt,
            epsilon=epsilon,
            n_levels=n_levels,
        )
        for k, w in enumerate(shares, start=1)
    ]


def apply_theta(players, theta: float) -> list[StorageParams]:
    """Scale every player's energy and power by ``theta`` (no re-flooring)."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    return [replace(p, e_max=p.e_max * theta, q_max=p.q_max * theta) for p in players]


def size_fleet(demand, res, eta: float, c_rate: float, shares, n_levels: int, **player_kw) -> SizingResult:
    """Residual demand -> required capacity -> per-player parameters."""
    sized = required_capacity(residual_demand(demand, res), eta, c_rate)
    players = ()
    if len(shares):
        players = tuple(partition_players(sized.e_max, sized.q_max, shares, n_levels, eta=eta, **player_kw))
    return replace(sized, per_player=players)
