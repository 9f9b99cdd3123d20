"""Uniform-price clearing of a stepwise demand curve against a fixed supply."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ClearingResult,
    DemandCurve,
    GameState,
    MarketOutcome,
    Scenario,
    net_supply,
    scaled_tol,
)


def active_block(curve: DemandCurve, supply: float) -> int:
    """0-based index of the block that sets the price for ``supply``.

    Blocks own the half-open volume interval ``(vol_{j-1}, vol_j]``; zero
    supply belongs to the first block and oversupply to the last.  A supply
    within tolerance of a breakpoint counts as sitting on it.
    """
    tol = scaled_tol(curve.max_volume)
    j = int(np.searchsorted(curve.volumes, supply - tol, side="left"))
    return min(j, curve.n_blocks - 1)


def clear_hour(curve: DemandCurve, supply: float) -> ClearingResult:
    bad = curve.violations()
    if bad:
        raise ValueError(f"invalid curve for hour {curve.hour}: {'; '.join(bad)}")
    tol = scaled_tol(curve.max_volume)
    if supply < -tol:
        raise ValueError(f"negative supply {supply!r} in hour {curve.hour}")
    supply = max(float(supply), 0.0)
    j = active_block(curve, supply)
    vol_d = curve.max_volume
    if supply > vol_d + tol:
        served, curtailment = vol_d, supply - vol_d
    else:
        served, curtailment = min(supply, vol_d), 0.0
    partial = max(served - curve.block_starts[j], 0.0)
    return ClearingResult(
        supply=supply,
        price=float(curve.prices[j]),
        active_block=j,
        served=served,
        partial_fill=partial,
        curtailment=curtailment,
        unmet=vol_d - served,
    )


def consumer_surplus(curve: DemandCurve, result: ClearingResult) -> float:
    """Surplus of the blocks strictly above the clearing price.

    The price-setting block pays its own bid and contributes nothing, so
    partial fills never generate surplus.
    """
    j = result.active_block
    if not 0 <= j < curve.n_blocks or curve.prices[j] != result.price:
        raise ValueError("clearing result does not belong to this curve")
    above = slice(0, j)
    return float(np.sum((curve.prices[above] - result.price) * curve.block_widths[above]))


def consumer_surplus_telescoped(curve: DemandCurve, block: int) -> float:
    """Same quantity written as sum_k (pr_k - pr_{k+1}) vol_k over blocks above ``block``."""
    k = np.arange(curve.n_blocks - 1)
    y = (k < block).astype(float)
    return float(np.sum((curve.prices[:-1] - curve.prices[1:]) * curve.volumes[:-1] * y))


def producer_surplus(result: ClearingResult, charge, discharge, res_t: float, ocs) -> float:
    """Storage profits plus revenue of delivered renewable energy.

    ``charge``, ``discharge`` and ``ocs`` hold one entry per player for this
    hour.  Curtailed energy earns nothing.
    """
    charge = np.asarray(charge, dtype=float)
    discharge = np.asarray(discharge, dtype=float)
    ocs = np.asarray(ocs, dtype=float)
    if not charge.shape == discharge.shape == ocs.shape:
        raise ValueError("charge, discharge and ocs must have one entry per player")
    lam = result.price
    storage = np.sum(discharge * (lam - ocs) - charge * (lam + ocs))
    return float(storage + lam * (res_t - result.curtailment))


@dataclass(frozen=True)
class MarketReport:
    """Hourly outcomes of a game state plus daily totals."""

    hours: tuple[MarketOutcome, ...]

    def _total(self, attr) -> float:
        return float(sum(getattr(h, attr) for h in self.hours))

    @property
    def prices(self) -> np.ndarray:
        return np.array([h.price for h in self.hours])

    @property
    def unmet(self) -> float:
        return self._total("unmet")

    @property
    def curtailment(self) -> float:
        return self._total("curtailment")

    @property
    def consumer_surplus(self) -> float:
        return self._total("consumer_surplus")

    @property
    def producer_surplus(self) -> float:
        return self._total("producer_surplus")

    @property
    def social_welfare(self) -> float:
        return self.consumer_surplus + self.producer_surplus

    def totals(self) -> dict:
        p = self.prices
        return {
            "social_welfare": self.social_welfare,
            "consumer_surplus": self.consumer_surplus,
            "producer_surplus": self.producer_surplus,
            "unmet": self.unmet,
            "curtailment": self.curtailment,
            "mean_price": float(p.mean()) if len(p) else 0.0,
            "peak_price": float(p.max()) if len(p) else 0.0,
        }


def player_profits(state: GameState, scenario: Scenario, prices=None) -> np.ndarray:
    """Daily profit of each player at the prices cleared by ``state``."""
    if prices is None:
        prices = hourly_metrics(state, scenario).prices
    ocs = [p.oc for p in scenario.players]
    return np.array([
        float(np.sum(s.discharge * (prices - oc) - s.charge * (prices + oc)))
        for s, oc in zip(state.schedules, ocs)
    ])


def hourly_metrics(state: GameState, scenario: Scenario) -> MarketReport:
    supply = net_supply(state, scenario.res)
    ocs = [p.oc for p in scenario.players]
    out = []
    for t, curve in enumerate(scenario.curves):
        r = clear_hour(curve, supply[t])
        ch = [s.charge[t] for s in state.schedules]
        dis = [s.discharge[t] for s in state.schedules]
        out.append(MarketOutcome(
            hour=t + 1,
            price=r.price,
            active_block=r.active_block,
            served=r.served,
            partial_fill=r.partial_fill,
            curtailment=r.curtailment,
            unmet=r.unmet,
            consumer_surplus=consumer_surplus(curve, r),
            producer_surplus=producer_surplus(r, ch, dis, float(scenario.res[t]), ocs),
        ))
    return MarketReport(tuple(out))
