"""Seeded synthetic load / wind / solar year for tests, demos and benchmarks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .timeseries import AnnualSeries

__all__ = ["synthetic_frame", "synthetic_year", "write_csv"]

DEFAULT_SEED = 2023
YEAR_START = "2019-01-01 00:00"


def synthetic_frame(seed: int = DEFAULT_SEED, days: int = 365, start: str = YEAR_START) -> pd.DataFrame:
    """Hourly frame with ``timestamp``, ``load`` (MW), ``wind`` and ``solar`` (capacity factors).

    Load carries a summer-peaking seasonal cycle, a two-hump diurnal shape, a
    weekend dip and multi-day weather anomalies; solar follows day length with
    per-day cloudiness; wind is a seasonal AR(1) process.
    """
    rng = np.random.default_rng(seed)
    hours = days * 24
    stamps = pd.date_range(start, periods=hours, freq="h")
    h = np.arange(hours)
    hod = h % 24
    doy = (h // 24) % 365
    season = np.cos(2 * np.pi * (doy - 200) / 365)  # +1 late July, -1 mid January

    # multi-day weather: AR(1) over days, shared across features with different signs
    weather = np.empty(days)
    weather[0] = rng.normal()
    for d in range(1, days):
        weather[d] = 0.8 * weather[d - 1] + 0.6 * rng.normal()
    weather_h = np.repeat(weather, 24)

    diurnal = 0.55 + 0.25 * np.exp(-((hod - 8) ** 2) / 8) + 0.45 * np.exp(-((hod - 18) ** 2) / 10)
    weekend = np.isin(stamps.dayofweek, (5, 6))
    load = 30000 * (1 + 0.18 * season + 0.05 * weather_h) * diurnal * np.where(weekend, 0.88, 1.0)
    load += 400 * rng.normal(size=hours)

    daylen = 12 + 2.5 * season
    sunrise = 12 - daylen / 2
    phase = np.clip((hod + 0.5 - sunrise) / daylen, 0, 1)
    cloud = np.clip(0.75 + 0.2 * rng.normal(size=days) - 0.1 * weather, 0.05, 1.0)
    solar = np.sin(np.pi * phase) ** 1.5 * (0.75 + 0.15 * season) * np.repeat(cloud, 24)

    wind = np.empty(hours)
    level = 0.0
    for i in range(hours):
        level = 0.97 * level + 0.25 * rng.normal()
        wind[i] = level
    wind = 1 / (1 + np.exp(-(wind - 0.4 * season - 0.3 * weather_h + 0.2 * np.cos(2 * np.pi * hod / 24))))

    return pd.DataFrame(
        {
            "timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"),
            "load": np.round(load, 3),
            "wind": np.round(wind, 6),
            "solar": np.round(solar, 6),
        }
    )


def synthetic_year(seed: int = DEFAULT_SEED, days: int = 365) -> AnnualSeries:
    frame = synthetic_frame(seed, days)
    return AnnualSeries.from_frame(frame[["load", "wind", "solar"]])


def write_csv(path, seed: int = DEFAULT_SEED, days: int = 365) -> Path:
    path = Path(path)
    synthetic_frame(seed, days).to_csv(path, index=False)
    return path
