"""Continent-level hourly dataset: aggregation, demand repair and replication."""
from __future__ import annotations

import calendar
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataIntegrityError
from .power_models import check_hourly

DATASET_COLUMNS = ("timestamp", "solar_cf", "wind_cf", "demand_GW")
MIN_DEMAND_COVERAGE = 8700 / 8760
_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def _as_ts(timestamps):
    return np.asarray(timestamps, dtype="datetime64[s]")


def hourly_range(start, hours: int) -> np.ndarray:
    return np.datetime64(start, "h").astype("datetime64[s]") + np.arange(hours) * np.timedelta64(3600, "s")


@dataclass(frozen=True)
class GenerationProfile:
    """Hourly capacity factors for one technology."""

    tech: str
    values: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        ts = _as_ts(self.timestamps)
        if self.tech not in ("solar", "wind"):
            raise DataIntegrityError(f"unknown technology {self.tech!r}")
        if values.shape != ts.shape:
            raise DataIntegrityError("values and timestamps differ in length")
        if np.any(~np.isfinite(values)) or np.any((values < 0) | (values > 1)):
            raise DataIntegrityError(f"{self.tech} capacity factors outside [0, 1]")
        check_hourly(ts, f"{self.tech} profile")
        values.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", ts)

    @property
    def epoch(self):
        return self.timestamps[0], self.timestamps[-1]

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class DemandSeries:
    """Hourly demand in GW."""

    values: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        ts = _as_ts(self.timestamps)
        if values.shape != ts.shape:
            raise DataIntegrityError("values and timestamps differ in length")
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise DataIntegrityError("demand must be finite and positive every hour")
        check_hourly(ts, "demand")
        values.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", ts)

    @property
    def peak(self) -> float:
        return float(self.values.max())

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def epoch(self):
        return self.timestamps[0], self.timestamps[-1]

    def __len__(self):
        return len(self.values)


def _check_same_epoch(profiles):
    ref = profiles[0].timestamps
    for p in profiles[1:]:
        if p.timestamps.shape != ref.shape or np.any(p.timestamps != ref):
            raise DataIntegrityError("profiles do not share the same epoch")


def aggregate_area_average(cell_profiles: Sequence[GenerationProfile]) -> GenerationProfile:
    """Unweighted mean over grid cells, hour by hour."""
    if not cell_profiles:
        raise DataIntegrityError("no cell profiles to aggregate")
    _check_same_epoch(cell_profiles)
    techs = {p.tech for p in cell_profiles}
    if len(techs) != 1:
        raise DataIntegrityError(f"mixed technologies {sorted(techs)}")
    stack = np.vstack([p.values for p in cell_profiles])
    mean = np.clip(stack.mean(axis=0), stack.min(axis=0), stack.max(axis=0))
    return GenerationProfile(cell_profiles[0].tech, mean, cell_profiles[0].timestamps)


def aggregate_capacity_weighted(
    national_profiles: Mapping[str, GenerationProfile], weights: Mapping[str, float]
) -> GenerationProfile:
    """Convex combination of national profiles weighted by installed capacity."""
    names = sorted(national_profiles)
    if not names:
        raise DataIntegrityError("no national profiles to aggregate")
    unknown = set(weights) - set(names)
    if unknown:
        raise DataIntegrityError(f"weights given for unknown countries {sorted(unknown)}")
    w = np.array([float(weights.get(n, 0.0)) for n in names])
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise DataIntegrityError("capacity weights must be non-negative")
    if w.sum() <= 0:
        raise DataIntegrityError("at least one capacity weight must be positive")
    profiles = [national_profiles[n] for n in names]
    _check_same_epoch(profiles)
    stack = np.vstack([p.values for p in profiles])
    combo = (w / w.sum()) @ stack
    combo = np.clip(combo, stack.min(axis=0), stack.max(axis=0))
    return GenerationProfile(profiles[0].tech, combo, profiles[0].timestamps)


def repair_demand(raw, timestamps=None, country: str | None = None,
                  min_coverage: float = MIN_DEMAND_COVERAGE) -> DemandSeries:
    """Fill missing hours (NaN) by linear interpolation.

    Leading and trailing gaps take the nearest observed value.  Series with
    fewer than ``min_coverage`` of hours present are rejected.
    """
    values = np.asarray(raw, dtype=float)
    label = country or "demand"
    if timestamps is None:
        timestamps = hourly_range("2022-01-01T00", len(values))
    present = np.isfinite(values)
    n = len(values)
    if n == 0 or present.sum() < min_coverage * n:
        raise DataIntegrityError(
            f"{label}: only {int(present.sum())} of {n} hours present "
            f"(need {min_coverage:.4%})"
        )
    if present.all():
        return DemandSeries(values.copy(), timestamps)
    idx = np.arange(n)
    filled = np.interp(idx, idx[present], values[present])
    return DemandSeries(filled, timestamps)


def _year_hours(year: int) -> int:
    return 8784 if calendar.isleap(year) else 8760


def replicate_demand_year(one_year: DemandSeries, first_year: int, last_year: int) -> DemandSeries:
    """Repeat a single calendar year of demand over ``first_year..last_year``.

    A non-leap source gets Feb 29 copied from Feb 28 in leap years; a leap
    source drops Feb 29 in common years.
    """
    start = pd.Timestamp(one_year.timestamps[0])
    if start.month != 1 or start.day != 1 or start.hour != 0:
        raise DataIntegrityError("source demand must start on 1 January 00:00")
    src_leap = calendar.isleap(start.year)
    if len(one_year) != _year_hours(start.year):
        raise DataIntegrityError(
            f"source demand covers {len(one_year)} hours, not one full year ({_year_hours(start.year)})"
        )
    if last_year < first_year:
        raise DataIntegrityError("epoch ends before it starts")

    feb28 = slice(58 * 24, 59 * 24)
    if src_leap:
        leap_pattern = one_year.values
        common_pattern = np.concatenate([one_year.values[: 59 * 24], one_year.values[60 * 24:]])
    else:
        common_pattern = one_year.values
        leap_pattern = np.concatenate([
            one_year.values[: 59 * 24], one_year.values[feb28], one_year.values[59 * 24:]
        ])
    years = range(first_year, last_year + 1)
    values = np.concatenate([leap_pattern if calendar.isleap(y) else common_pattern for y in years])
    return DemandSeries(values, hourly_range(f"{first_year}-01-01T00", len(values)))


def scale_to_capacity(profile: GenerationProfile | np.ndarray, nameplate: float) -> np.ndarray:
    """Hourly output in GW for ``nameplate`` GW of installed capacity."""
    if nameplate < 0:
        raise DataIntegrityError("nameplate capacity must be non-negative")
    values = profile.values if isinstance(profile, GenerationProfile) else np.asarray(profile, dtype=float)
    return nameplate * values


def read_demand_csv(path) -> dict:
    """Read ``timestamp,country,load_MW`` rows into per-country hourly arrays.

    Blank loads and absent hours both become NaN on a common hourly index
    spanning the file.  Returns ``{country: (timestamps, values_MW)}``.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype={"country": str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataIntegrityError(f"{path}: unreadable demand file ({exc})") from exc
    missing = [c for c in ("timestamp", "country", "load_MW") if c not in df.columns]
    if missing:
        raise DataIntegrityError(f"{path}: missing columns {missing}")
    ts = pd.to_datetime(df["timestamp"], utc=True, errors="coerce")
    load = pd.to_numeric(df["load_MW"], errors="coerce")
    blank = df["load_MW"].isna()
    bad = ts.isna() | df["country"].isna() | (load.isna() & ~blank) | (load <= 0)
    if bad.any():
        lines = (np.flatnonzero(bad.to_numpy()) + 2)[:10].tolist()
        raise DataIntegrityError(f"{path}: malformed rows on lines {lines}")
    ts = ts.dt.tz_localize(None)
    if (ts != ts.dt.floor("h")).any():
        raise DataIntegrityError(f"{path}: timestamps must fall on the hour")
    frame = pd.DataFrame({"ts": ts, "country": df["country"], "load": load})
    if frame.duplicated(["ts", "country"]).any():
        raise DataIntegrityError(f"{path}: duplicate (timestamp, country) rows")
    index = pd.date_range(frame["ts"].min(), frame["ts"].max(), freq="h")
    out = {}
    for country, grp in frame.groupby("country", sort=True):
        series = grp.set_index("ts")["load"].reindex(index)
        out[country] = (index.to_numpy().astype("datetime64[s]"), series.to_numpy(dtype=float))
    return out


def build_demand(path, min_coverage: float = MIN_DEMAND_COVERAGE) -> DemandSeries:
    """Repair each country's demand and sum to a regional total in GW."""
    countries = read_demand_csv(path)
    total = None
    timestamps = None
    for country, (ts, load_mw) in countries.items():
        repaired = repair_demand(load_mw, ts, country=country, min_coverage=min_coverage)
        total = repaired.values / 1000.0 if total is None else total + repaired.values / 1000.0
        timestamps = ts
    return DemandSeries(total, timestamps)


@dataclass(frozen=True)
class GridDataset:
    """Canonical simulator input: aligned solar, wind and demand series."""

    solar_cf: np.ndarray
    wind_cf: np.ndarray
    demand: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        arrays = {}
        for name in ("solar_cf", "wind_cf", "demand"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if a.ndim != 1:
                raise DataIntegrityError(f"{name} must be one-dimensional")
            if np.any(~np.isfinite(a)):
                raise DataIntegrityError(f"{name} contains non-finite values")
            a.setflags(write=False)
            arrays[name] = a
        n = len(arrays["demand"])
        if n == 0:
            raise DataIntegrityError("dataset is empty")
        if len(arrays["solar_cf"]) != n or len(arrays["wind_cf"]) != n:
            raise DataIntegrityError("dataset columns differ in length")
        for name in ("solar_cf", "wind_cf"):
            if np.any((arrays[name] < 0) | (arrays[name] > 1)):
                raise DataIntegrityError(f"{name} outside [0, 1]")
        if np.any(arrays["demand"] <= 0):
            raise DataIntegrityError("demand must be positive every hour")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)
        if self.timestamps is not None:
            ts = _as_ts(self.timestamps)
            if len(ts) != n:
                raise DataIntegrityError("timestamps differ in length from data")
            check_hourly(ts, "dataset")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return len(self.demand)

    @property
    def peak_demand(self) -> float:
        return float(self.demand.max())

    @property
    def mean_demand(self) -> float:
        return float(self.demand.mean())

    def head(self, hours: int) -> "GridDataset":
        ts = None if self.timestamps is None else self.timestamps[:hours]
        return GridDataset(self.solar_cf[:hours], self.wind_cf[:hours], self.demand[:hours], ts)

    @classmethod
    def from_series(cls, solar: GenerationProfile, wind: GenerationProfile, demand: DemandSeries) -> "GridDataset":
        """Align profiles with demand; demand may cover a longer span."""
        if solar.tech != "solar" or wind.tech != "wind":
            raise DataIntegrityError("expected one solar and one wind profile")
        _check_same_epoch([solar, wind])
        pos = np.searchsorted(demand.timestamps, solar.timestamps)
        pos = np.minimum(pos, len(demand.timestamps) - 1)
        if np.any(demand.timestamps[pos] != solar.timestamps):
            raise DataIntegrityError("demand does not cover the generation epoch")
        return cls(solar.values, wind.values, demand.values[pos], solar.timestamps)

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for a in (self.solar_cf, self.wind_cf, self.demand):
            h.update(a.tobytes())
        return h.hexdigest()


def write_dataset(path, dataset: GridDataset):
    n = len(dataset)
    ts = dataset.timestamps if dataset.timestamps is not None else hourly_range("1970-01-01T00", n)
    pd.DataFrame({
        "timestamp": pd.to_datetime(ts).strftime(_TS_FORMAT),
        "solar_cf": dataset.solar_cf,
        "wind_cf": dataset.wind_cf,
        "demand_GW": dataset.demand,
    }).to_csv(path, index=False, float_format="%.17g")


def read_dataset(path) -> GridDataset:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataIntegrityError(f"{path}: unreadable dataset ({exc})") from exc
    missing = [c for c in DATASET_COLUMNS if c not in df.columns]
    if missing:
        raise DataIntegrityError(f"{path}: missing columns {missing}")
    numeric = df[list(DATASET_COLUMNS[1:])].apply(pd.to_numeric, errors="coerce")
    ts = pd.to_datetime(df["timestamp"], utc=True, errors="coerce")
    bad = numeric.isna().any(axis=1) | ts.isna()
    if bad.any():
        lines = (np.flatnonzero(bad.to_numpy()) + 2)[:10].tolist()
        raise DataIntegrityError(f"{path}: missing or malformed values on lines {lines}")
    return GridDataset(
        numeric["solar_cf"].to_numpy(), numeric["wind_cf"].to_numpy(), numeric["demand_GW"].to_numpy(),
        ts.dt.tz_localize(None).to_numpy().astype("datetime64[s]"),
    )


def synthetic_dataset(hours: int = 8760, seed: int = 0, start="1980-01-01T00") -> GridDataset:
    """Plausible-looking solar/wind/demand series for demos and tests.

    Solar follows a clipped diurnal and seasonal sine, wind a logistic
    transform of an AR(1) process with a winter bias, demand a diurnal and
    seasonal swing around 340 GW.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(hours)
    day = 2 * np.pi * (t % 24) / 24
    year = 2 * np.pi * t / 8766
    solar = np.clip(-np.cos(day) * (0.55 + 0.3 * -np.cos(year)) - 0.1, 0, None)
    solar *= np.clip(1 - 0.5 * rng.random(hours // 24 + 1), 0, 1)[t // 24]

    # standardised AR(1) latent through a logistic: long lulls, rarely dead calm
    phi = 0.97
    shocks = rng.normal(0, np.sqrt(1 - phi**2), hours)
    latent = np.empty(hours)
    z = 0.0
    for i in range(hours):
        z = phi * z + shocks[i]
        latent[i] = z
    wind = 1.0 / (1.0 + np.exp(0.5 - 1.3 * latent - 0.4 * np.cos(year)))

    demand = 340 * (1 + 0.12 * np.cos(year) + 0.1 * np.sin(day - np.pi / 2)) + rng.normal(0, 5, hours)
    demand = np.maximum(demand, 50.0)
    return GridDataset(np.clip(solar, 0, 1), wind, demand, hourly_range(start, hours))
