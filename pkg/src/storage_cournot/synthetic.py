"""Synthetic Denmark-like input data for demos and regression runs.

Capacity-factor days and day-ahead bid tables are generated from smooth
daily shapes plus seeded jitter, so the files are reproducible byte for
byte.  The bid tables deliberately contain negative-price rows and an
uneven number of blocks per hour so the cleaning and down-sampling steps
have work to do.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ingest import BidRow, write_cf_csv

HOURS = np.arange(1, 25)
DATA_DIR = Path(__file__).parent / "data"
PRICE_CAP = 4000.0


def _cf_day(season: str, rng: np.random.Generator, shift: float) -> np.ndarray:
    h = HOURS.astype(float)
    if season == "winter":
        solar = 0.12 * np.clip(np.sin(np.pi * (h - 8) / 8), 0, None)
        wind = 0.5 + 0.3 * np.sin(2 * np.pi * (h + shift) / 14) + 0.1 * np.sin(2 * np.pi * (h + 2 * shift) / 6)
        onshore = 0.85 * wind + 0.05 * np.cos(2 * np.pi * h / 24)
    elif season == "summer":
        solar = 0.78 * np.clip(np.sin(np.pi * (h - 4.5) / 16), 0, None) ** 1.3
        wind = 0.24 + 0.08 * np.sin(2 * np.pi * (h + shift) / 20)
        onshore = 0.9 * wind - 0.03 * np.cos(2 * np.pi * (h - 15) / 24)
    else:
        raise ValueError(f"unknown season {season!r}")
    cf = np.stack((solar, wind, onshore), axis=1)
    cf = cf * (1 + 0.05 * rng.standard_normal(cf.shape))
    return np.clip(cf, 0.0, 0.98).round(4)


def capacity_factor_days(season: str, n_days: int = 7, seed: int = 2030) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed + (0 if season == "winter" else 1))
    return {f"{season}-{k + 1:02d}": _cf_day(season, rng, shift=3.0 * k - 9.0) for k in range(n_days)}


def total_demand(season: str, scale: float = 1.0) -> np.ndarray:
    """Maximum bid volume per hour, MWh."""
    h = HOURS.astype(float)
    morning = np.exp(-0.5 * ((h - 9) / 2.2) ** 2)
    evening = np.exp(-0.5 * ((h - 18.5) / 2.0) ** 2)
    if season == "winter":
        base = 4300 + 1100 * morning + 1500 * evening - 500 * np.exp(-0.5 * ((h - 3) / 2.5) ** 2)
    else:
        base = 3300 + 600 * morning + 900 * evening - 400 * np.exp(-0.5 * ((h - 3) / 2.5) ** 2)
    return base * scale


def _price_of_fraction(x: np.ndarray, peak: float) -> np.ndarray:
    """Willingness to pay at cumulative fraction ``x`` of the hour's demand."""
    return peak * (1.0 - x) ** 1.6


def bid_rows(season: str, n_days: int = 5, seed: int = 2024) -> list[BidRow]:
    """Hourly stepwise bid curves for ``n_days`` days, one row per block."""
    rng = np.random.default_rng(seed + (0 if season == "winter" else 1))
    peak = 300.0 if season == "winter" else 260.0
    rows = []
    for day in range(n_days):
        scale = 1.0 + 0.04 * (day - n_days // 2) / max(n_days, 1)
        vol_d = total_demand(season, scale) * (1 + 0.02 * rng.standard_normal(24))
        for t in range(24):
            n = int(rng.integers(12, 19))
            inelastic = 0.3 * vol_d[t]
            fr = np.sort(rng.uniform(0.32, 0.99, n - 2))
            fr = np.concatenate(([0.3], fr, [1.0]))
            vols = fr * vol_d[t]
            prices = np.concatenate(([PRICE_CAP], _price_of_fraction(fr[1:-1], peak), [0.0]))
            prices = np.round(prices, 2)
            vols[0] = inelastic
            name = f"{season}-{day + 1:02d}"
            for p, v in zip(prices, vols):
                rows.append(BidRow(name, t + 1, float(p), float(round(v, 1))))
            if t % 5 == 0:
                # oversupply bids below zero; excluded from the demand model
                rows.append(BidRow(name, t + 1, -5.0, float(round(vol_d[t] * 1.08, 1))))
                rows.append(BidRow(name, t + 1, -40.0, float(round(vol_d[t] * 1.15, 1))))
    return rows


def write_bundle(directory=DATA_DIR):
    """Regenerate the bundled CSV files."""
    import csv

    from .ingest import DEMAND_COLUMNS

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for season in ("winter", "summer"):
        write_cf_csv(directory / f"{season}_cf.csv", capacity_factor_days(season))
        with open(directory / f"{season}_demand.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(DEMAND_COLUMNS)
            for r in bid_rows(season):
                w.writerow([r.day, r.hour, r.price, r.cum_volume])
    return directory


if __name__ == "__main__":
    print(write_bundle())
