"""Reading scenario data and preparing it for the game.

File formats (UTF-8, comma separated, decimal point):

* demand bids:       ``day,hour,price_eur_mwh,cum_volume_mwh`` -- one row per bid block
* capacity factors:  ``day,hour,cf_solar,cf_offshore,cf_onshore``
* RES profile:       ``hour,res_mwh``

Hours are numbered 1..24.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import DemandCurve

DEMAND_COLUMNS = ("day", "hour", "price_eur_mwh", "cum_volume_mwh")
CF_COLUMNS = ("day", "hour", "cf_solar", "cf_offshore", "cf_onshore")
RES_COLUMNS = ("hour", "res_mwh")

#: 2030 installed capacity projection, MW (solar, offshore wind, onshore wind).
DK_2030_CAPACITIES = (5300.0, 4900.0, 4800.0)


class DataError(ValueError):
    """Input file is unusable (missing columns, empty, inconsistent)."""


@dataclass(frozen=True)
class BidRow:
    day: str
    hour: int
    price: float
    cum_volume: float


@dataclass
class RawBidTable:
    rows: list[BidRow] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)  # (line number, message)

    def days(self) -> list[str]:
        return list(dict.fromkeys(r.day for r in self.rows))

    def hourly_rows(self, day: str) -> dict[int, list[BidRow]]:
        out: dict[int, list[BidRow]] = defaultdict(list)
        for r in self.rows:
            if r.day == day:
                out[r.hour].append(r)
        return dict(sorted(out.items()))


def _reader(path, columns):
    f = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(f)
    missing = [c for c in columns if c not in (reader.fieldnames or [])]
    if missing:
        f.close()
        raise DataError(f"{path}: missing columns {missing}")
    return f, reader


def parse_demand_csv(path) -> RawBidTable:
    """Typed bid rows; malformed rows are collected with their line numbers."""
    table = RawBidTable()
    f, reader = _reader(path, DEMAND_COLUMNS)
    with f:
        for row in reader:
            line = reader.line_num
            try:
                table.rows.append(BidRow(
                    day=row["day"].strip(),
                    hour=int(row["hour"]),
                    price=float(row["price_eur_mwh"]),
                    cum_volume=float(row["cum_volume_mwh"]),
                ))
            except (TypeError, ValueError) as exc:
                table.errors.append((line, str(exc)))
    return table


def clean_curve(rows, hour: int | None = None) -> DemandCurve:
    """Build a valid demand curve from raw bid rows of one hour.

    Negative-price bids are dropped, blocks are sorted by descending price,
    duplicate prices keep the larger cumulative volume, and rows whose
    volume does not exceed the previous kept block are discarded.
    """
    rows = list(rows)
    if not rows:
        raise DataError("no bid rows")
    if hour is None:
        hour = rows[0].hour if hasattr(rows[0], "hour") else 1
    pairs = [(float(r.price), float(r.cum_volume)) if hasattr(r, "price") else (float(r[0]), float(r[1]))
             for r in rows]
    best: dict[float, float] = {}
    for price, vol in pairs:
        if price < 0 or not math.isfinite(price) or not math.isfinite(vol):
            continue
        best[price] = max(vol, best.get(price, -math.inf))
    prices, volumes = [], []
    for price in sorted(best, reverse=True):
        vol = best[price]
        if vol <= (volumes[-1] if volumes else 0.0):
            continue
        prices.append(price)
        volumes.append(vol)
    if not prices:
        raise DataError(f"hour {hour}: no usable bids after cleaning")
    return DemandCurve(prices, volumes, hour=hour)


def downsample_indices(n_blocks: int, target: int) -> np.ndarray:
    """0-based indices of ``target`` blocks spread uniformly, endpoints kept."""
    if target >= n_blocks:
        return np.arange(n_blocks)
    if target == 1:
        return np.array([n_blocks - 1])
    k = np.arange(target)
    return np.floor(k * (n_blocks - 1) / (target - 1) + 0.5).astype(int)


def downsample_curves(days):
    """Reduce every hourly curve to the smallest block count found anywhere.

    ``days`` is a list of days, each a list of hourly curves; the same
    nesting is returned.
    """
    days = [list(d) for d in days]
    curves = [c for d in days for c in d]
    if not curves:
        raise DataError("no curves to down-sample")
    target = min(c.n_blocks for c in curves)
    out = []
    for day in days:
        reduced = []
        for c in day:
            idx = downsample_indices(c.n_blocks, target)
            reduced.append(DemandCurve(c.prices[idx], c.volumes[idx], hour=c.hour))
        out.append(reduced)
    return out


def curve_features(day) -> np.ndarray:
    """Flattened feature vector of a day of equal-size curves (volumes then prices)."""
    return np.concatenate([np.concatenate((c.volumes, c.prices)) for c in day])


def medoid_day(days) -> int:
    """Index of the day with the smallest summed Euclidean distance to all others.

    ``days`` holds one array-like per day (e.g. a 24x3 capacity-factor block
    or :func:`curve_features` output); ties go to the lowest index.
    """
    X = [np.asarray(d, dtype=float).ravel() for d in days]
    if not X:
        raise DataError("no days to choose from")
    if len({x.size for x in X}) != 1:
        raise DataError("days differ in dimension")
    X = np.stack(X)
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1))
    return int(np.argmin(dist.sum(axis=1)))


def parse_capacity_factor_csv(path) -> dict[str, np.ndarray]:
    """Capacity-factor days as ``{day: array of shape (24, 3)}``."""
    days: dict[str, dict[int, tuple[float, float, float]]] = defaultdict(dict)
    f, reader = _reader(path, CF_COLUMNS)
    with f:
        for row in reader:
            try:
                hour = int(row["hour"])
                cf = tuple(float(row[c]) for c in CF_COLUMNS[2:])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
            if not all(0 <= v <= 1 for v in cf):
                raise DataError(f"{path}:{reader.line_num}: capacity factor outside [0, 1]")
            days[row["day"].strip()][hour] = cf
    out = {}
    for day, hours in days.items():
        out[day] = np.array([hours[h] for h in sorted(hours)])
    return out


def scale_res(cf_day, capacities=DK_2030_CAPACITIES) -> np.ndarray:
    """Hourly RES output: capacity factors times installed MW, summed over technologies."""
    cf = np.asarray(cf_day, dtype=float)
    cap = np.asarray(capacities, dtype=float)
    if np.any(cap < 0):
        raise ValueError("capacities must be non-negative")
    return cf @ cap


def parse_res_csv(path) -> np.ndarray:
    f, reader = _reader(path, RES_COLUMNS)
    values = {}
    with f:
        for row in reader:
            try:
                values[int(row["hour"])] = float(row["res_mwh"])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
    return np.array([values[h] for h in sorted(values)])


def curves_for_day(table: RawBidTable, day: str) -> list[DemandCurve]:
    hours = table.hourly_rows(day)
    if not hours:
        raise DataError(f"day {day!r} not in bid table")
    return [clean_curve(rows, hour=h) for h, rows in hours.items()]


def write_demand_csv(path, curves, day: str = "d1"):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(DEMAND_COLUMNS)
        for c in curves:
            for p, v in zip(c.prices, c.volumes):
                w.writerow([day, c.hour, repr(float(p)), repr(float(v))])


def write_res_csv(path, res):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(RES_COLUMNS)
        for t, v in enumerate(res, start=1):
            w.writerow([t, repr(float(v))])


def write_cf_csv(path, days: dict[str, np.ndarray]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CF_COLUMNS)
        for day, cf in days.items():
            for t, row in enumerate(cf, start=1):
                w.writerow([day, t, *(repr(float(x)) for x in row)])


def load_representative_day(demand_path, cf_path, capacities=DK_2030_CAPACITIES):
    """Cleaned, down-sampled medoid demand day and medoid RES profile.

    Returns ``(curves, res, info)``.
    """
    table = parse_demand_csv(demand_path)
    if table.errors:
        line, msg = table.errors[0]
        raise DataError(f"{demand_path}:{line}: {msg}")
    day_names = table.days()
    days = downsample_curves([curves_for_day(table, d) for d in day_names])
    d_idx = medoid_day([curve_features(d) for d in days])
    cf_days = parse_capacity_factor_csv(cf_path)
    cf_names = list(cf_days)
    c_idx = medoid_day([cf_days[n] for n in cf_names])
    res = scale_res(cf_days[cf_names[c_idx]], capacities)
    info = {"demand_day": day_names[d_idx], "cf_day": cf_names[c_idx], "blocks": days[d_idx][0].n_blocks}
    return days[d_idx], res, info


def resolve(base: Path | str, path: Path | str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(base) / p
