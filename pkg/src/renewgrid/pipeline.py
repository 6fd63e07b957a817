"""File-to-dataset pipeline: weather cells + demand -> canonical dataset."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataIntegrityError
from .power_models import cell_capacity_factors, read_weather_csv
from .timeseries import (DemandSeries, GenerationProfile, GridDataset, aggregate_area_average,
                         aggregate_capacity_weighted, build_demand, replicate_demand_year)

log = logging.getLogger(__name__)

GENERATION_CACHE = "generation_cache.csv"


def weather_files(weather_dir) -> list:
    """Per-cell CSV files under ``weather_dir``, sorted for reproducibility."""
    weather_dir = Path(weather_dir)
    if not weather_dir.is_dir():
        raise DataIntegrityError(f"weather directory not found: {weather_dir}")
    files = sorted(p for p in weather_dir.rglob("*.csv") if p.is_file())
    if not files:
        raise DataIntegrityError(f"no weather files (*.csv) in {weather_dir}")
    return files


def _generation_key(files, weather_dir, cfg) -> str:
    h = hashlib.sha256()
    for f in files:
        h.update(str(f.relative_to(weather_dir)).encode())
        h.update(hashlib.sha256(f.read_bytes()).digest())
    settings = {
        "panel": asdict(cfg.panel), "turbine": asdict(cfg.turbine),
        "aggregation": cfg.aggregation, "weights": cfg.capacity_weights,
    }
    h.update(json.dumps(settings, sort_keys=True, default=str).encode())
    return h.hexdigest()


def build_generation(cfg):
    """Aggregate solar and wind profiles from every weather cell.

    Returns (solar, wind, cell_count).  In ``capacity_weighted`` mode cells
    are grouped by their parent directory (the country code), averaged per
    country and then weighted by installed capacity.
    """
    weather_dir = Path(cfg.weather_dir)
    files = weather_files(weather_dir)
    solar_cells, wind_cells, countries = [], [], []
    for f in files:
        weather = read_weather_csv(f)
        s, w = cell_capacity_factors(weather, cfg.panel, cfg.turbine)
        solar_cells.append(GenerationProfile("solar", s, weather.timestamps))
        wind_cells.append(GenerationProfile("wind", w, weather.timestamps))
        countries.append(f.parent.relative_to(weather_dir).as_posix())
    if cfg.aggregation == "area":
        return aggregate_area_average(solar_cells), aggregate_area_average(wind_cells), len(files)

    national = {"solar": {}, "wind": {}}
    for country in sorted(set(countries)):
        idx = [i for i, c in enumerate(countries) if c == country]
        national["solar"][country] = aggregate_area_average([solar_cells[i] for i in idx])
        national["wind"][country] = aggregate_area_average([wind_cells[i] for i in idx])
    solar = aggregate_capacity_weighted(national["solar"], cfg.capacity_weights["solar"])
    wind = aggregate_capacity_weighted(national["wind"], cfg.capacity_weights["wind"])
    return solar, wind, len(files)


def cached_generation(cfg, cache_dir):
    """build_generation with a content-keyed cache in ``cache_dir``."""
    weather_dir = Path(cfg.weather_dir)
    files = weather_files(weather_dir)
    key = _generation_key(files, weather_dir, cfg)
    cache = Path(cache_dir) / GENERATION_CACHE
    if cache.is_file():
        with cache.open() as fh:
            header = fh.readline().strip()
        if header == f"# generation {key}":
            df = pd.read_csv(cache, comment="#", float_precision="round_trip")
            ts = pd.to_datetime(df["timestamp"], utc=True).dt.tz_localize(None).to_numpy().astype("datetime64[s]")
            log.info("reusing cached generation profiles from %s", cache)
            return (GenerationProfile("solar", df["solar_cf"].to_numpy(), ts),
                    GenerationProfile("wind", df["wind_cf"].to_numpy(), ts), int(df["cells"].iloc[0]), True)
    solar, wind, cells = build_generation(cfg)
    cache.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        "timestamp": pd.to_datetime(solar.timestamps).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "solar_cf": solar.values, "wind_cf": wind.values, "cells": cells,
    })
    with cache.open("w") as fh:
        fh.write(f"# generation {key}\n")
        frame.to_csv(fh, index=False, float_format="%.17g")
    return solar, wind, cells, False


def align_demand(demand: DemandSeries, solar: GenerationProfile) -> DemandSeries:
    """Use demand directly if it spans the generation epoch, else replicate its single year."""
    covers = (demand.timestamps[0] <= solar.timestamps[0]) and (demand.timestamps[-1] >= solar.timestamps[-1])
    if covers:
        return demand
    first = pd.Timestamp(solar.timestamps[0]).year
    last = pd.Timestamp(solar.timestamps[-1]).year
    return replicate_demand_year(demand, first, last)


def build_canonical_dataset(cfg, cache_dir=None):
    """Build the simulator input from weather and demand files.

    Returns the GridDataset, a summary dict, and whether the generation
    profiles came from cache.
    """
    cache_dir = Path(cache_dir or cfg.output_dir)
    solar, wind, cells, cached = cached_generation(cfg, cache_dir)
    demand = align_demand(build_demand(cfg.demand_file, cfg.min_demand_coverage), solar)
    dataset = GridDataset.from_series(solar, wind, demand)
    summary = {
        "hours": len(dataset),
        "epoch_start": str(np.datetime_as_string(dataset.timestamps[0], unit="h")),
        "epoch_end": str(np.datetime_as_string(dataset.timestamps[-1], unit="h")),
        "cells": cells,
        "peak_demand_GW": dataset.peak_demand,
        "mean_demand_GW": dataset.mean_demand,
        "mean_solar_cf": float(dataset.solar_cf.mean()),
        "mean_wind_cf": float(dataset.wind_cf.mean()),
    }
    return dataset, summary, cached
