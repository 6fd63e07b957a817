from __future__ import annotations

import numpy as np
import pytest

from renewgrid.dispatch import GridConfig
from renewgrid.timeseries import GridDataset, hourly_range

# lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def reference_dispatch(gen, demand, capacity, gas_cap, threshold, level0, power=float("inf")):
    """Hour-by-hour replay of the three dispatch rules in plain Python.

    Written independently of the numba kernel; returns per-hour lists of
    (level_end, gas, charge, discharge, served, curtailed).
    """
    out = []
    level = level0
    for g, d in zip(gen, demand):
        gas = charge = discharge = curtailed = 0.0
        if g >= d:
            room = capacity - level
            charge = max(0.0, min(g - d, room, power))
            curtailed = (g - d) - charge
            level += charge
            served = d
        else:
            need = d - g
            if level > threshold:
                discharge = min(need, level, power)
                level -= discharge
                need -= discharge
            if need > 0 and level <= threshold:
                refill = max(0.0, min(threshold - level, power))
                gas = min(gas_cap, need + refill)
                used = min(gas, need)
                if need + refill <= gas_cap and refill == threshold - level:
                    charge, level = refill, threshold
                else:
                    charge = gas - used
                    level += charge
                need -= used
            served = d - need
        out.append((level, gas, charge, discharge, served, curtailed))
    return out


def toy_dataset() -> GridDataset:
    """Six hours: demand 1 GW, renewables 2, 2, 0, 0, 0, 0 GW at overbuild 2."""
    return GridDataset(
        solar_cf=np.array([1.0, 1.0, 0, 0, 0, 0]),
        wind_cf=np.zeros(6),
        demand=np.ones(6),
        timestamps=hourly_range("2020-01-01T00", 6),
    )


TOY_CONFIG = GridConfig(overbuild=2.0, wind_fraction=0.0, storage_energy=1.0,
                        dispatch_capacity=0.5, threshold_fraction=0.5)


def random_case(rng, max_hours=48):
    """A random small dataset and config, biased toward the interesting regimes."""
    n = int(rng.integers(1, max_hours + 1))
    ds = GridDataset(rng.random(n), rng.random(n), rng.uniform(0.05, 1.0, n))
    storage = float(rng.choice([0.0, rng.uniform(0, 4)]))
    gas = float(rng.choice([0.0, rng.uniform(0, 1.2)]))
    threshold = float(rng.choice([0.0, 1.0, rng.uniform(0, 1)]))
    cfg = GridConfig(float(rng.uniform(0, 3)), float(rng.random()), storage, gas, threshold)
    return ds, cfg, float(rng.random())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_weather_cell(path, lat, lon, hours=48, start="2022-06-01T00", seed=0):
    """Plausible hourly weather for one cell, in the per-cell CSV layout."""
    import pandas as pd

    from renewgrid.power_models import solar_position

    r = np.random.default_rng(seed)
    ts = hourly_range(start, hours)
    alt, _ = solar_position(lat, lon, ts)
    toa = np.maximum(1361.0 * np.sin(np.radians(alt)), 0.0)
    ghi = toa * r.uniform(0.2, 0.75, hours)
    v50 = r.uniform(2, 14, hours)
    v10 = v50 * r.uniform(0.6, 0.9, hours)
    pd.DataFrame({
        "timestamp": pd.to_datetime(ts).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "ghi": ghi, "toa": toa, "t_amb": r.uniform(280, 300, hours),
        "v10": v10, "v50": v50, "p_surf": r.uniform(98000, 102500, hours),
        "lat": lat, "lon": lon,
    }).to_csv(path, index=False)


def write_demand_file(path, countries=("DE", "FR"), hours=48, start="2022-06-01T00", seed=1, gaps=()):
    import pandas as pd

    r = np.random.default_rng(seed)
    ts = pd.to_datetime(hourly_range(start, hours)).strftime("%Y-%m-%dT%H:%M:%SZ")
    rows = []
    for k, c in enumerate(countries):
        load = 40000 + 10000 * k + r.normal(0, 2000, hours)
        for i in range(hours):
            if (c, i) in gaps:
                rows.append((ts[i], c, ""))
            else:
                rows.append((ts[i], c, f"{load[i]:.1f}"))
    pd.DataFrame(rows, columns=["timestamp", "country", "load_MW"]).to_csv(path, index=False)
