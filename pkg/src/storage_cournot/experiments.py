"""Scenario construction from run configurations and single-point runs.

A run configuration is a JSON object; every path in it is relative to the
file it was loaded from.  Example::

    {
      "demand": "winter_demand.csv",
      "capacity_factors": "winter_cf.csv",
      "mode": "nash",
      "players": 2,
      "theta": 1.0,
      "eta": 0.9,
      "oc": 0.5,
      "sweep": {"players": [1, 2, 4], "mode": "nash"}
    }

Storage is sized once from the base efficiency and then split across
players, so a sweep over ``eta`` or ``oc`` changes the technology and
leaves the installed capacity alone.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .clearing import MarketReport, player_profits
from .equilibrium import find_nash
from .ingest import (
    DK_2030_CAPACITIES,
    DataError,
    curves_for_day,
    load_representative_day,
    parse_demand_csv,
    parse_res_csv,
    resolve,
)
from .model import GameState, Scenario, Schedule, SolverOptions, validate_scenario
from .planner import solve_planner
from .sizing import apply_theta, shares_for, size_fleet

MODES = ("nash", "planner", "sweep")
SWEEP_AXES = ("players", "theta", "eta", "oc")


class ConfigError(ValueError):
    """The run configuration is malformed."""


@dataclass(frozen=True)
class RunConfig:
    demand: Path
    capacity_factors: Path | None = None
    res: Path | None = None
    day: str | None = None  # demand day to use with an explicit RES file
    mode: str = "nash"
    players: int = 1
    shares: tuple[float, ...] | None = None
    theta: float = 1.0
    eta: float = 0.9
    oc: float = 0.5
    c_rate: float = 0.25
    n_levels: int = 5
    alpha_batt: float = 0.5
    epsilon: float = 0.05
    capacities: tuple[float, ...] = DK_2030_CAPACITIES
    price_cap: float = 4000.0
    tolerance: float = 1e-6
    max_sweeps: int = 100
    time_limit: float | None = None
    out: Path = Path("runs")
    sweep: dict = field(default_factory=dict)
    sweep_mode: str = "nash"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be non-negative")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be positive")
        if (self.capacity_factors is None) == (self.res is None):
            raise ConfigError("give exactly one of 'capacity_factors' and 'res'")
        if self.players < 0 or self.theta < 0:
            raise ConfigError("players and theta must be non-negative")
        if self.sweep_mode not in ("nash", "planner"):
            raise ConfigError("sweep mode must be 'nash' or 'planner'")
        unknown = set(self.sweep) - set(SWEEP_AXES)
        if unknown:
            raise ConfigError(f"unknown sweep axes {sorted(unknown)}")
        for axis, values in self.sweep.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigError(f"sweep axis {axis!r} must be a non-empty list")
        if self.mode == "sweep" and not self.sweep:
            raise ConfigError("sweep mode needs at least one sweep axis")

    @classmethod
    def from_dict(cls, data: dict, base: Path | str = ".") -> "RunConfig":
        data = dict(data)
        sweep = dict(data.pop("sweep", None) or {})
        sweep_mode = sweep.pop("mode", "nash")
        known = {f for f in cls.__dataclass_fields__} - {"sweep", "sweep_mode"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "demand" not in data:
            raise ConfigError("config needs a 'demand' file")
        for key in ("demand", "capacity_factors", "res", "out"):
            if data.get(key) is not None:
                data[key] = resolve(base, data[key])
        for key in ("shares", "capacities"):
            if data.get(key) is not None:
                data[key] = tuple(float(x) for x in data[key])
        try:
            return cls(**data, sweep=sweep, sweep_mode=sweep_mode)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data, base=path.parent)

    def point(self, **overrides) -> "RunConfig":
        return replace(self, **overrides)

    def grid(self) -> list[dict]:
        """Every combination of the sweep axes, in the order given."""
        axes = [a for a in SWEEP_AXES if a in self.sweep]
        return [dict(zip(axes, combo)) for combo in itertools.product(*(self.sweep[a] for a in axes))]


def load_market(cfg: RunConfig):
    """Representative-day curves and RES profile named by the configuration."""
    if cfg.capacity_factors is not None:
        curves, res, info = load_representative_day(cfg.demand, cfg.capacity_factors, cfg.capacities)
        return curves, res, info
    table = parse_demand_csv(cfg.demand)
    day = cfg.day or table.days()[0]
    curves = curves_for_day(table, day)
    return curves, parse_res_csv(cfg.res), {"demand_day": day}


def build_scenario(cfg: RunConfig, market=None) -> tuple[Scenario, dict]:
    """Sized, partitioned and θ-scaled scenario for one configuration."""
    curves, res, info = load_market(cfg) if market is None else market
    demand = np.array([c.max_volume for c in curves])
    shares = cfg.shares if cfg.shares is not None else shares_for(cfg.players)
    if len(shares) != cfg.players:
        raise ConfigError(f"{len(shares)} shares given for {cfg.players} players")
    sized = size_fleet(demand, res, eta=cfg.eta, c_rate=cfg.c_rate, shares=shares, n_levels=cfg.n_levels,
                       oc=cfg.oc, alpha_batt=cfg.alpha_batt, epsilon=cfg.epsilon)
    players = apply_theta(sized.per_player, cfg.theta)
    options = SolverOptions(tolerance=cfg.tolerance, max_sweeps=cfg.max_sweeps, time_limit=cfg.time_limit)
    scenario = Scenario(curves, res, players, price_cap=cfg.price_cap, options=options)
    info = dict(info, e_max=sized.e_max, q_max=sized.q_max)
    return scenario, info


def with_technology(scenario: Scenario, eta: float | None = None, oc: float | None = None) -> Scenario:
    players = [replace(p, eta=p.eta if eta is None else eta, oc=p.oc if oc is None else oc)
               for p in scenario.players]
    return scenario.with_players(players)


@dataclass
class RunResult:
    mode: str
    scenario: Scenario
    state: GameState
    outcome: MarketReport
    profits: np.ndarray
    meta: dict

    def summary(self) -> dict:
        players = []
        for p, s, profit in zip(self.scenario.players, self.state.schedules, self.profits):
            players.append({
                "id": p.player_id,
                "q_max": p.q_max,
                "e_max": p.e_max,
                "eta": p.eta,
                "oc": p.oc,
                "n_levels": p.n_levels,
                "profit": float(profit),
                "levels": [int(x) for x in s.levels],
            })
        return {
            "mode": self.mode,
            "horizon": self.scenario.T,
            "totals": self.outcome.totals(),
            "players": players,
            **self.meta,
        }

    def outcome_rows(self) -> tuple[list[str], list[list]]:
        header = ["hour", "price", "served", "curtailment", "unmet", "cs", "ps"]
        for p in self.scenario.players:
            k = p.player_id
            header += [f"ch_{k}", f"dis_{k}", f"soc_{k}"]
        rows = []
        for t, h in enumerate(self.outcome.hours):
            row = [h.hour, h.price, h.served, h.curtailment, h.unmet, h.consumer_surplus, h.producer_surplus]
            for s in self.state.schedules:
                row += [s.charge[t], s.discharge[t], s.soc[t]]
            rows.append(row)
        return header, rows


def run_scenario(scenario: Scenario, mode: str) -> RunResult:
    if mode == "nash":
        rep = find_nash(scenario)
        meta = {"converged": rep.converged, "iterations": rep.iterations, "cycle_length": rep.cycle_length}
        return RunResult(mode, scenario, rep.final_state, rep.outcome, rep.per_player_profit, meta)
    if mode == "planner":
        sol = solve_planner(scenario)
        state = sol.state
        profits = player_profits(state, scenario, sol.outcome.prices)
        meta = {"converged": True, "backend": sol.backend}
        return RunResult(mode, scenario, state, sol.outcome, profits, meta)
    raise ValueError(f"unknown run mode {mode!r}")


def run_point(cfg: RunConfig, mode: str, market=None, **overrides) -> RunResult:
    """One standalone run with some configuration fields overridden."""
    point = cfg.point(**overrides)
    # capacity stays sized at the base efficiency; eta and oc only change the technology
    sized_at = cfg.point(**{k: v for k, v in overrides.items() if k not in ("eta", "oc")})
    scenario, info = build_scenario(sized_at, market)
    scenario = with_technology(scenario, eta=point.eta, oc=point.oc)
    violations = validate_scenario(scenario)
    if violations:
        raise DataError("; ".join(str(v) for v in violations))
    result = run_scenario(scenario, mode)
    result.meta.update(parameters={
        "players": point.players, "theta": point.theta, "eta": point.eta, "oc": point.oc,
        "c_rate": point.c_rate, "n_levels": point.n_levels,
    }, sizing={"e_max": info["e_max"], "q_max": info["q_max"]})
    return result


def state_from_summary(summary: dict, scenario: Scenario) -> GameState:
    """Rebuild the schedules recorded in a summary against ``scenario``."""
    by_id = {p["id"]: p["levels"] for p in summary["players"]}
    return GameState(tuple(Schedule.from_levels(p, by_id[p.player_id]) for p in scenario.players))


def config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    for k, v in d.items():
        if isinstance(v, Path):
            d[k] = str(v)
    return d
