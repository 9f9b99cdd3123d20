"""Domain types shared across the engine.

Quantities are MWh per hourly step (MW and MWh coincide at one-hour
resolution), prices are EUR/MWh and money is EUR.  All containers are
frozen after construction; numpy payloads are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Absolute tolerance used for feasibility tests on MWh quantities.
TOL = 1e-9


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def scaled_tol(*magnitudes: float) -> float:
    """Tolerance scaled to the magnitude of the numbers being compared."""
    return TOL * max(1.0, *(abs(float(m)) for m in magnitudes))


@dataclass(frozen=True, eq=False)
class DemandCurve:
    """Stepwise hourly demand curve.

    Block ``j`` is bought at ``prices[j]`` and ``volumes[j]`` is the cumulative
    volume of blocks ``0..j``.  Prices descend, cumulative volumes ascend.
    """

    prices: np.ndarray
    volumes: np.ndarray
    hour: int = 1

    def __post_init__(self):
        object.__setattr__(self, "prices", _frozen(self.prices))
        object.__setattr__(self, "volumes", _frozen(self.volumes))

    @property
    def n_blocks(self) -> int:
        return len(self.prices)

    @property
    def block_starts(self) -> np.ndarray:
        """Volume served before block j starts (``vol_{j-1}``, 0 for the first block)."""
        return np.concatenate(([0.0], self.volumes[:-1]))

    @property
    def block_widths(self) -> np.ndarray:
        return self.volumes - self.block_starts

    @property
    def max_volume(self) -> float:
        return float(self.volumes[-1])

    def violations(self) -> list[str]:
        out = []
        p, v = self.prices, self.volumes
        if p.ndim != 1 or v.ndim != 1 or len(p) != len(v):
            return ["prices and volumes must be 1-D arrays of equal length"]
        if len(p) == 0:
            return ["curve has no blocks"]
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            return ["non-finite price or volume"]
        if np.any(np.diff(p) >= 0):
            out.append("prices not strictly descending")
        if p[-1] < 0:
            out.append("negative price block")
        if v[0] <= 0:
            out.append("first cumulative volume not positive")
        if np.any(np.diff(v) <= 0):
            out.append("cumulative volumes not strictly ascending")
        return out

    def __repr__(self) -> str:
        return f"DemandCurve(hour={self.hour}, blocks={self.n_blocks}, max_volume={self.max_volume:g})"


@dataclass(frozen=True)
class StorageParams:
    """Physical and economic parameters of one storage player."""

    player_id: int
    q_max: float
    e_max: float
    eta: float = 1.0
    oc: float = 0.0
    alpha_batt: float = 0.5
    epsilon: float = 0.05
    n_levels: int = 1

    @property
    def step(self) -> float:
        """Size of one offer level, ``q_max / n_levels``."""
        return self.q_max / self.n_levels

    @property
    def levels(self) -> np.ndarray:
        return self.step * np.arange(1, self.n_levels + 1)

    @property
    def initial_soc(self) -> float:
        return self.alpha_batt * self.e_max

    @property
    def terminal_band(self) -> tuple[float, float]:
        e0 = self.initial_soc
        return e0 * (1.0 - self.epsilon), e0 * (1.0 + self.epsilon)

    def violations(self) -> list[str]:
        out = []
        # q_max == 0 is allowed: capacity scaled to zero leaves an idle-only player
        if not self.q_max >= 0:
            out.append("q_max negative")
        if not self.e_max >= 0:
            out.append("e_max negative")
        if not 0 < self.eta <= 1:
            out.append("eta out of (0,1]")
        if not self.oc >= 0:
            out.append("oc negative")
        if not 0 <= self.alpha_batt <= 1:
            out.append("alpha_batt out of [0,1]")
        if not self.epsilon >= 0:
            out.append("epsilon negative")
        if int(self.n_levels) != self.n_levels or self.n_levels < 1:
            out.append("n_levels not a positive integer")
        return out


def soc_trajectory(params: StorageParams, charge, discharge) -> np.ndarray:
    """State of charge after each hour, starting from ``alpha_batt * e_max``."""
    soc = np.empty(len(charge))
    e = params.initial_soc
    for t in range(len(charge)):
        e = e + params.eta * charge[t] - discharge[t]
        soc[t] = e
    return soc


@dataclass(frozen=True, eq=False)
class Schedule:
    """One player's day: charge/discharge per hour and the resulting SoC.

    ``levels`` records the chosen offer level per hour: ``0`` idle, ``-i``
    charge at level ``i``, ``+i`` discharge at level ``i``.
    """

    player_id: int
    levels: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray

    @classmethod
    def from_levels(cls, params: StorageParams, levels: Sequence[int]) -> "Schedule":
        lv = np.asarray(levels, dtype=int)
        charge = np.where(lv < 0, -lv * params.step, 0.0)
        discharge = np.where(lv > 0, lv * params.step, 0.0)
        soc = soc_trajectory(params, charge, discharge)
        return cls(params.player_id, _frozen(lv, int), _frozen(charge), _frozen(discharge), _frozen(soc))

    @classmethod
    def idle(cls, params: StorageParams, horizon: int) -> "Schedule":
        return cls.from_levels(params, np.zeros(horizon, dtype=int))

    @property
    def horizon(self) -> int:
        return len(self.levels)

    def key(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.levels)

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return self.player_id == other.player_id and self.key() == other.key()

    def __hash__(self):
        return hash((self.player_id, self.key()))

    def violations(self, params: StorageParams) -> list[str]:
        out = []
        ch, dis, soc = self.charge, self.discharge, self.soc
        if np.any(ch < 0) or np.any(dis < 0):
            out.append("negative charge or discharge")
        if np.any((ch > 0) & (dis > 0)):
            out.append("simultaneous charge and discharge")
        if params.step > 0:
            for q in np.concatenate((ch, dis)):
                units = q / params.step
                if abs(units - round(units)) * params.step > 1e-9 or round(units) > params.n_levels:
                    out.append("quantity off the offer grid")
                    break
        elif np.any(ch > 0) or np.any(dis > 0):
            out.append("quantity off the offer grid")
        recomputed = soc_trajectory(params, ch, dis)
        if not np.array_equal(recomputed, soc):
            out.append("soc inconsistent with charge/discharge")
        tol = scaled_tol(params.e_max)
        if np.any(soc < -tol) or np.any(soc > params.e_max + tol):
            out.append("soc outside [0, e_max]")
        if len(soc):
            lo, hi = params.terminal_band
            if not lo - tol <= soc[-1] <= hi + tol:
                out.append("terminal soc outside band")
        return out


@dataclass(frozen=True)
class GameState:
    """Joint strategy profile: one schedule per player, in player order."""

    schedules: tuple[Schedule, ...]

    def __post_init__(self):
        object.__setattr__(self, "schedules", tuple(self.schedules))

    @classmethod
    def idle(cls, players: Iterable[StorageParams], horizon: int) -> "GameState":
        return cls(tuple(Schedule.idle(p, horizon) for p in players))

    @property
    def horizon(self) -> int:
        return self.schedules[0].horizon if self.schedules else 0

    def key(self) -> tuple:
        return tuple(s.key() for s in self.schedules)

    def replace(self, index: int, schedule: Schedule) -> "GameState":
        s = list(self.schedules)
        s[index] = schedule
        return GameState(tuple(s))

    def total_charge(self, horizon: int | None = None) -> np.ndarray:
        if not self.schedules:
            return np.zeros(horizon or 0)
        return np.sum([s.charge for s in self.schedules], axis=0)

    def total_discharge(self, horizon: int | None = None) -> np.ndarray:
        if not self.schedules:
            return np.zeros(horizon or 0)
        return np.sum([s.discharge for s in self.schedules], axis=0)

    def exogenous(self, index: int, horizon: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Aggregate (charge, discharge) of every player except ``index``."""
        T = self.horizon if horizon is None else horizon
        ch, dis = np.zeros(T), np.zeros(T)
        for k, s in enumerate(self.schedules):
            if k != index:
                ch += s.charge
                dis += s.discharge
        return ch, dis


@dataclass(frozen=True)
class ClearingResult:
    """Market outcome of a single hour."""

    supply: float
    price: float
    active_block: int  # 0-based index of the price-setting block
    served: float
    partial_fill: float
    curtailment: float
    unmet: float


@dataclass(frozen=True)
class MarketOutcome:
    hour: int
    price: float
    active_block: int
    served: float
    partial_fill: float
    curtailment: float
    unmet: float
    consumer_surplus: float
    producer_surplus: float

    @property
    def social_welfare(self) -> float:
        return self.consumer_surplus + self.producer_surplus


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    max_sweeps: int = 100
    order: tuple[int, ...] | None = None  # player update order, default ascending id
    time_limit: float | None = None  # seconds, MILP backend only


@dataclass(frozen=True)
class Scenario:
    """A full game instance."""

    curves: tuple[DemandCurve, ...]
    res: np.ndarray
    players: tuple[StorageParams, ...] = ()
    price_cap: float = 4000.0
    options: SolverOptions = field(default_factory=SolverOptions)
    horizon: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "res", _frozen(self.res))
        if self.horizon is None:
            object.__setattr__(self, "horizon", len(self.curves))

    @property
    def T(self) -> int:
        return self.horizon

    def with_players(self, players: Iterable[StorageParams]) -> "Scenario":
        return Scenario(self.curves, self.res, tuple(players), self.price_cap, self.options, self.horizon)

    def idle_state(self) -> GameState:
        return GameState.idle(self.players, self.T)

    def player_index(self, player_id: int) -> int:
        for k, p in enumerate(self.players):
            if p.player_id == player_id:
                return k
        raise KeyError(player_id)


@dataclass(frozen=True)
class Violation:
    where: str
    rule: str

    def __str__(self) -> str:
        return f"{self.where}: {self.rule}"


def validate_scenario(s: Scenario) -> list[Violation]:
    """Every broken invariant of the scenario, with its location."""
    out: list[Violation] = []
    if len(s.curves) != s.T:
        out.append(Violation("scenario", f"curve count {len(s.curves)} != horizon {s.T}"))
    for t, c in enumerate(s.curves, start=1):
        for rule in c.violations():
            out.append(Violation(f"hour {t}", rule))
        if c.n_blocks and np.any(c.prices > s.price_cap):
            out.append(Violation(f"hour {t}", f"price above cap {s.price_cap:g}"))
    if s.res.ndim != 1 or len(s.res) != s.T:
        out.append(Violation("res", f"length {s.res.size} != horizon {s.T}"))
    elif np.any(s.res < 0) or not np.all(np.isfinite(s.res)):
        bad = [int(t) + 1 for t in np.flatnonzero(~(s.res >= 0))]
        out.append(Violation("res", f"negative or non-finite generation at hours {bad}"))
    ids = [p.player_id for p in s.players]
    if len(set(ids)) != len(ids):
        out.append(Violation("players", "duplicate player ids"))
    for p in s.players:
        for rule in p.violations():
            out.append(Violation(f"player {p.player_id}", rule))
    if s.options.tolerance < 0:
        out.append(Violation("options", "negative tolerance"))
    return out


def net_supply(state: GameState, res, p: int | None = None) -> np.ndarray:
    """Supply offered to the market each hour: RES plus discharges minus charges.

    With ``p`` given, player ``p``'s own action and the aggregate of the
    others are added separately; the total is the same.
    """
    res = np.asarray(res, dtype=float)
    if state.schedules and state.horizon != len(res):
        raise ValueError(f"horizon mismatch: state {state.horizon}, res {len(res)}")
    if p is None:
        return res + state.total_discharge(len(res)) - state.total_charge(len(res))
    own = state.schedules[p]
    ch_o, dis_o = state.exogenous(p, len(res))
    return res - own.charge + own.discharge - ch_o + dis_o
