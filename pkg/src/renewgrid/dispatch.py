"""Myopic, rules-based hourly dispatch of a single-node grid.

Each hour the residual load (demand minus wind and solar) is settled by
three rules:

* surplus charges storage up to its capacity, the rest is curtailed;
* a deficit is drawn from storage first while storage sits above the
  dispatch threshold;
* once storage is at or below the threshold, dispatchable generation
  serves the deficit and then refills storage back to the threshold.

Gas may fire in the same hour that storage is drawn down to the
threshold if residual load remains.  Storage is lossless and, unless
``storage_power`` is given, limited only by energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, astuple
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property

import numpy as np
import pandas as pd
from numba import njit

from .errors import ConfigError, DataIntegrityError, InvariantViolation
from .timeseries import GridDataset

HOURS_PER_YEAR = 8766.0


@dataclass(frozen=True, order=True)
class GridConfig:
    """The five scanned parameters.

    ``storage_energy`` is in GWh, ``dispatch_capacity`` in GW and
    ``threshold_fraction`` is a share of ``storage_energy``.
    """

    overbuild: float
    wind_fraction: float
    storage_energy: float = 0.0
    dispatch_capacity: float = 0.0
    threshold_fraction: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ConfigError(f"{f.name} must be finite")
        if self.overbuild < 0:
            raise ConfigError("overbuild must be non-negative")
        if not 0 <= self.wind_fraction <= 1:
            raise ConfigError("wind_fraction must lie in [0, 1]")
        if self.storage_energy < 0 or self.dispatch_capacity < 0:
            raise ConfigError("storage_energy and dispatch_capacity must be non-negative")
        if not 0 <= self.threshold_fraction <= 1:
            raise ConfigError("threshold_fraction must lie in [0, 1]")

    @property
    def threshold_energy(self) -> float:
        return self.threshold_fraction * self.storage_energy

    def as_tuple(self):
        return astuple(self)


@dataclass(frozen=True)
class HourState:
    """Flows for one hour; energies in GWh equal powers in GW over one hour."""

    storage_level: float
    renewable_gen: float
    demand: float
    residual: float
    gas_out: float
    charge: float
    discharge: float
    served: float
    curtailed: float


@dataclass(frozen=True)
class OutageEvent:
    start: int
    duration: int
    hourly_fraction_met: tuple
    energy_fraction_met: float

    @property
    def min_fraction_met(self) -> float:
        return min(self.hourly_fraction_met)


@dataclass
class HourlyTrace:
    """Per-hour arrays; ``storage_level`` is the level at the end of each hour."""

    storage_level: np.ndarray
    renewable_gen: np.ndarray
    gas_out: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    served: np.ndarray
    curtailed: np.ndarray
    demand: np.ndarray

    def __len__(self):
        return len(self.served)

    def state(self, hour: int) -> HourState:
        d = float(self.demand[hour])
        g = float(self.renewable_gen[hour])
        return HourState(
            storage_level=float(self.storage_level[hour]), renewable_gen=g, demand=d, residual=d - g,
            gas_out=float(self.gas_out[hour]), charge=float(self.charge[hour]),
            discharge=float(self.discharge[hour]), served=float(self.served[hour]),
            curtailed=float(self.curtailed[hour]),
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "hour": np.arange(len(self)),
            "storage_level": self.storage_level,
            "gas_out": self.gas_out,
            "served": self.served,
            "curtailed": self.curtailed,
        })

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


@dataclass
class SimulationResult:
    reliability: float
    gas_share: float
    outage_table: "OutageTable" = field(repr=False)
    hours: int
    config: GridConfig
    initial_storage: float = 1.0
    trace: HourlyTrace | None = field(default=None, repr=False)

    @property
    def lole_hours_per_year(self) -> float:
        return (1.0 - self.reliability) * HOURS_PER_YEAR

    @cached_property
    def outages(self) -> list:
        return self.outage_table.events()

    @property
    def outage_hours(self) -> int:
        return int(self.outage_table.durations.sum())


@njit(cache=True, inline="always")
def _step(level, gen, demand, capacity, gas_cap, threshold, power):
    """One hour of the three dispatch rules.

    Returns (level, gas, charge, discharge, unserved, curtailed).
    """
    residual = demand - gen
    gas = 0.0
    charge = 0.0
    discharge = 0.0
    curtailed = 0.0
    unserved = 0.0
    if residual <= 0.0:
        surplus = -residual
        charge = min(surplus, capacity - level, power)
        if charge < 0.0:
            charge = 0.0
        curtailed = surplus - charge
        level = level + charge
    else:
        remaining = residual
        if level > threshold:
            discharge = min(remaining, level, power)
            level = level - discharge
            remaining = remaining - discharge
        if remaining > 0.0:
            if level <= threshold:
                headroom = min(threshold - level, power)
                if headroom < 0.0:
                    headroom = 0.0
                gas = min(gas_cap, remaining + headroom)
                to_load = min(gas, remaining)
                # a refill limited by neither gas nor power lands exactly on the threshold
                if remaining + headroom <= gas_cap and headroom == threshold - level:
                    charge = headroom
                    level = threshold
                else:
                    charge = gas - to_load
                    level = level + charge
                unserved = remaining - to_load
            else:
                unserved = remaining
    return level, gas, charge, discharge, unserved, curtailed


@njit(cache=True)
def _run_trace(solar_cf, wind_cf, demand, solar_cap, wind_cap, capacity, gas_cap,
               threshold, power, level0):
    n = demand.shape[0]
    level_out = np.empty(n)
    gen_out = np.empty(n)
    gas_out = np.empty(n)
    charge_out = np.empty(n)
    discharge_out = np.empty(n)
    unserved_out = np.empty(n)
    curtailed_out = np.empty(n)
    level = level0
    for h in range(n):
        gen = solar_cap * solar_cf[h] + wind_cap * wind_cf[h]
        level, gas, charge, discharge, unserved, curtailed = _step(
            level, gen, demand[h], capacity, gas_cap, threshold, power)
        level_out[h] = level
        gen_out[h] = gen
        gas_out[h] = gas
        charge_out[h] = charge
        discharge_out[h] = discharge
        unserved_out[h] = unserved
        curtailed_out[h] = curtailed
    return level_out, gen_out, gas_out, charge_out, discharge_out, unserved_out, curtailed_out


@njit(cache=True)
def _run_summary(solar_cf, wind_cf, demand, solar_cap, wind_cap, capacity, gas_cap,
                 threshold, power, level0):
    n = demand.shape[0]
    level = level0
    met = 0
    gas_total = 0.0
    for h in range(n):
        gen = solar_cap * solar_cf[h] + wind_cap * wind_cf[h]
        level, gas, charge, discharge, unserved, curtailed = _step(
            level, gen, demand[h], capacity, gas_cap, threshold, power)
        if unserved <= 0.0:
            met += 1
        gas_total += gas
    return met, gas_total


@njit(cache=True, nogil=True)
def _run_batch(solar_cf, wind_cf, demand, peak, params, level0_frac, power):
    """Hours met and gas energy for each row of ``params``.

    Rows are (overbuild, wind_fraction, storage_energy, dispatch_capacity,
    threshold_fraction) and are evaluated independently.
    """
    m = params.shape[0]
    met = np.empty(m, dtype=np.int64)
    gas = np.empty(m)
    for k in range(m):
        ob = params[k, 0]
        wf = params[k, 1]
        cap = params[k, 2]
        met[k], gas[k] = _run_summary(
            solar_cf, wind_cf, demand, ob * (1.0 - wf) * peak, ob * wf * peak, cap,
            params[k, 3], params[k, 4] * cap, power, level0_frac * cap)
    return met, gas


def _capacities(config: GridConfig, peak: float):
    return (config.overbuild * (1.0 - config.wind_fraction) * peak,
            config.overbuild * config.wind_fraction * peak)


def _check_options(initial_storage, storage_power):
    if not 0 <= initial_storage <= 1:
        raise ConfigError("initial_storage must be a fraction in [0, 1]")
    power = np.inf if storage_power is None else float(storage_power)
    if power < 0:
        raise ConfigError("storage_power must be non-negative")
    return power


@dataclass(frozen=True)
class OutageTable:
    """Outage events in columnar form; ``events()`` materialises them."""

    starts: np.ndarray
    durations: np.ndarray
    hourly_fraction_met: np.ndarray  # concatenated over events
    energy_fraction_met: np.ndarray

    def __len__(self):
        return len(self.starts)

    def events(self) -> list:
        bounds = np.concatenate([[0], np.cumsum(self.durations)]).tolist()
        frac = self.hourly_fraction_met.tolist()
        return [
            OutageEvent(start=s, duration=d, hourly_fraction_met=tuple(frac[a:b]), energy_fraction_met=f)
            for s, d, a, b, f in zip(self.starts.tolist(), self.durations.tolist(), bounds[:-1],
                                     bounds[1:], self.energy_fraction_met.tolist())
        ]


def find_outages(served: np.ndarray, demand: np.ndarray, unserved: np.ndarray) -> OutageTable:
    """Group consecutive shortfall hours into maximal outage events."""
    short = unserved > 0.0
    edges = np.diff(short.astype(np.int8), prepend=0, append=0)
    starts = np.flatnonzero(edges == 1)
    durations = np.flatnonzero(edges == -1) - starts
    hours = np.flatnonzero(short)
    fractions = np.minimum(served[hours] / demand[hours], np.nextafter(1.0, 0.0))
    if len(starts):
        offsets = np.concatenate([[0], np.cumsum(durations)[:-1]])
        energy = np.add.reduceat(served[hours], offsets) / np.add.reduceat(demand[hours], offsets)
    else:
        energy = np.empty(0)
    return OutageTable(starts, durations, fractions, energy)


def simulate(config: GridConfig, dataset: GridDataset, *, initial_storage: float = 1.0,
             storage_power: float | None = None, trace: bool = False,
             peak_demand: float | None = None) -> SimulationResult:
    """Run the dispatch rules over every hour of ``dataset``.

    Parameters
    ----------
    initial_storage : float
        Starting storage level as a fraction of ``storage_energy``.
    storage_power : float, optional
        Charge/discharge limit in GW; unlimited by default.
    trace : bool
        Attach the per-hour trace to the result.
    peak_demand : float, optional
        Demand that an overbuild of 1 corresponds to; defaults to the
        dataset peak.
    """
    if len(dataset) == 0:
        raise DataIntegrityError("dataset is empty")
    power = _check_options(initial_storage, storage_power)
    peak = dataset.peak_demand if peak_demand is None else float(peak_demand)
    solar_cap, wind_cap = _capacities(config, peak)
    level, gen, gas, charge, discharge, unserved, curtailed = _run_trace(
        dataset.solar_cf, dataset.wind_cf, dataset.demand, solar_cap, wind_cap,
        float(config.storage_energy), float(config.dispatch_capacity),
        float(config.threshold_energy), power, initial_storage * config.storage_energy,
    )
    demand = dataset.demand
    served = demand - unserved
    n = len(demand)
    result = SimulationResult(
        reliability=float(np.count_nonzero(unserved <= 0.0)) / n,
        # sequential total, as accumulated by the batch kernel
        gas_share=float(min(np.cumsum(gas)[-1] / demand.sum(), 1.0)),
        outage_table=find_outages(served, demand, unserved),
        hours=n,
        config=config,
        initial_storage=initial_storage,
    )
    if trace:
        result.trace = HourlyTrace(level, gen, gas, charge, discharge, served, curtailed, demand)
    return result


def simulate_summary(config: GridConfig, dataset: GridDataset, *, initial_storage: float = 1.0,
                     storage_power: float | None = None):
    """(reliability, gas_share) without materialising the trace."""
    power = _check_options(initial_storage, storage_power)
    solar_cap, wind_cap = _capacities(config, dataset.peak_demand)
    met, gas = _run_summary(
        dataset.solar_cf, dataset.wind_cf, dataset.demand, solar_cap, wind_cap,
        float(config.storage_energy), float(config.dispatch_capacity),
        float(config.threshold_energy), power, initial_storage * config.storage_energy,
    )
    return met / len(dataset), min(gas / dataset.demand.sum(), 1.0)


def simulate_many(params: np.ndarray, dataset: GridDataset, *, workers: int = 1,
                  initial_storage: float = 1.0, storage_power: float | None = None):
    """Reliability and gas share for each row of an ``(m, 5)`` parameter array.

    Rows are split across ``workers`` threads; the numba kernel releases the
    GIL.  Each row's result is independent of the split.
    """
    if len(dataset) == 0:
        raise DataIntegrityError("dataset is empty")
    power = _check_options(initial_storage, storage_power)
    params = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 5)
    args = (dataset.solar_cf, dataset.wind_cf, dataset.demand, dataset.peak_demand)
    workers = max(1, int(workers))
    if workers == 1 or len(params) < 2:
        met, gas = _run_batch(*args, params, float(initial_storage), power)
    else:
        chunks = np.array_split(params, min(workers, len(params)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _run_batch(*args, c, float(initial_storage), power), chunks))
        met = np.concatenate([p[0] for p in parts])
        gas = np.concatenate([p[1] for p in parts])
    return met / len(dataset), np.minimum(gas / dataset.demand.sum(), 1.0)


def step(config: GridConfig, storage_level: float, renewable_gen: float, demand: float,
         storage_power: float | None = None) -> HourState:
    """Apply the dispatch rules to a single hour.

    ``storage_level`` is the level at the start of the hour; the returned
    state carries the level at its end.
    """
    power = np.inf if storage_power is None else float(storage_power)
    level, gas, charge, discharge, unserved, curtailed = _step(
        float(storage_level), float(renewable_gen), float(demand), float(config.storage_energy),
        float(config.dispatch_capacity), float(config.threshold_energy), power)
    return HourState(
        storage_level=level, renewable_gen=renewable_gen, demand=demand,
        residual=demand - renewable_gen, gas_out=gas, charge=charge, discharge=discharge,
        served=demand - unserved, curtailed=curtailed,
    )


_TRACE_FIELDS = ("storage_level", "renewable_gen", "gas_out", "charge", "discharge", "served", "curtailed")


def myopia_check(config: GridConfig, dataset: GridDataset, split_hour: int, **options) -> bool:
    """True iff the trace up to ``split_hour`` ignores all later data.

    Installed capacity is held at the full dataset's peak for both runs.
    """
    if not 0 <= split_hour <= len(dataset):
        raise DataIntegrityError("split_hour outside the epoch")
    if split_hour == 0:
        return True
    peak = dataset.peak_demand
    full = simulate(config, dataset, trace=True, peak_demand=peak, **options).trace
    part = simulate(config, dataset.head(split_hour), trace=True, peak_demand=peak, **options).trace
    return all(np.array_equal(getattr(full, n)[:split_hour], getattr(part, n)) for n in _TRACE_FIELDS)


def verify_trace(trace: HourlyTrace, config: GridConfig, tol: float = 1e-9):
    """Raise InvariantViolation if a trace breaks storage bounds or energy balance."""
    balance = trace.renewable_gen + trace.discharge + trace.gas_out - trace.charge - trace.curtailed - trace.served
    scale = np.maximum(1.0, trace.demand)
    problems = {
        "energy balance": np.abs(balance) > tol * scale,
        "storage below zero": trace.storage_level < -tol,
        "storage above capacity": trace.storage_level > config.storage_energy * (1 + tol) + tol,
        "served above demand": trace.served > trace.demand * (1 + tol),
        "gas above capacity": trace.gas_out > config.dispatch_capacity * (1 + tol) + tol,
        "negative curtailment": trace.curtailed < -tol,
    }
    for what, mask in problems.items():
        if mask.any():
            raise InvariantViolation(f"{what} at hour {int(np.flatnonzero(mask)[0])}")
