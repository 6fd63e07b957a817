"""Exhaustive grid scans and reliability/overbuild curves."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .costing import KW_PER_GW, TECHNOLOGIES, FinancialParams, annual_system_cost, installed_capacities, \
    merged_costs, unit_annual_cost
from .dispatch import GridConfig, simulate, simulate_many
from .errors import ConfigError, DataIntegrityError, UnreachableTarget
from .report import cost_breakdown_table, outage_summary
from .timeseries import GridDataset

log = logging.getLogger(__name__)

PARAMETERS = ("overbuild", "wind_fraction", "storage_energy", "dispatch_capacity", "threshold_fraction")


def _grid(values, name):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ConfigError(f"{name} grid is empty")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} grid has non-finite values")
    if np.any(np.diff(arr) <= 0):
        raise ConfigError(f"{name} grid must be strictly increasing")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class ScanSpec:
    overbuild: Sequence[float]
    wind_fraction: Sequence[float]
    storage_energy: Sequence[float] = (0.0,)
    dispatch_capacity: Sequence[float] = (0.0,)
    threshold_fraction: Sequence[float] = (0.0,)
    min_reliability: float = 0.0
    max_gas_share: float = 1.0
    costs: Mapping = field(default_factory=dict)
    financial: FinancialParams = FinancialParams()
    initial_storage: float = 1.0
    storage_power: float | None = None

    def __post_init__(self):
        for name in PARAMETERS:
            object.__setattr__(self, name, _grid(getattr(self, name), name))
        if not 0 <= self.min_reliability <= 1 or not 0 <= self.max_gas_share <= 1:
            raise ConfigError("constraints must lie in [0, 1]")
        # validate every corner through GridConfig
        for pick in (0, -1):
            GridConfig(*(getattr(self, n)[pick] for n in PARAMETERS))
        object.__setattr__(self, "costs", merged_costs(self.costs))

    @property
    def size(self) -> int:
        return int(np.prod([len(getattr(self, n)) for n in PARAMETERS]))

    def points(self) -> np.ndarray:
        """All grid points, shape (size, 5), in lexicographic parameter order."""
        mesh = np.meshgrid(*(np.array(getattr(self, n)) for n in PARAMETERS), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def simulation_key(self) -> dict:
        return {n: list(getattr(self, n)) for n in PARAMETERS} | {
            "initial_storage": self.initial_storage, "storage_power": self.storage_power,
        }

    def content_hash(self, dataset: GridDataset) -> str:
        h = hashlib.sha256(json.dumps(self.simulation_key(), sort_keys=True).encode())
        h.update(dataset.content_hash().encode())
        return h.hexdigest()

    def with_constraints(self, min_reliability=None, max_gas_share=None) -> "ScanSpec":
        kw = asdict(self) | {"costs": self.costs, "financial": self.financial}
        if min_reliability is not None:
            kw["min_reliability"] = min_reliability
        if max_gas_share is not None:
            kw["max_gas_share"] = max_gas_share
        return ScanSpec(**kw)


def point_costs(params: np.ndarray, peak_demand: float, costs: Mapping, fin: FinancialParams) -> np.ndarray:
    """Annual system cost for each parameter row, term-for-term as annual_system_cost."""
    costs = merged_costs(costs)
    ob, wf, e, g = params[:, 0], params[:, 1], params[:, 2], params[:, 3]
    caps = {"solar": ob * (1.0 - wf) * peak_demand, "wind": ob * wf * peak_demand, "storage": e, "dispatchable": g}
    total = np.zeros(len(params))
    for t in TECHNOLOGIES:
        total = total + caps[t] * KW_PER_GW * unit_annual_cost(costs[t], fin)
    return total


@dataclass
class ScanTable:
    params: np.ndarray
    cost: np.ndarray
    reliability: np.ndarray
    gas_share: np.ndarray

    def __len__(self):
        return len(self.cost)

    def feasible(self, min_reliability: float, max_gas_share: float) -> np.ndarray:
        return (self.reliability >= min_reliability) & (self.gas_share <= max_gas_share)

    def best_index(self, min_reliability: float, max_gas_share: float):
        """Cheapest feasible row; the earliest (lexicographically smallest) on ties."""
        ok = self.feasible(min_reliability, max_gas_share)
        if not ok.any():
            return None
        return int(np.argmin(np.where(ok, self.cost, np.inf)))

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.params, columns=list(PARAMETERS))
        df["annual_cost_usd"] = self.cost
        df["reliability"] = self.reliability
        df["gas_share"] = self.gas_share
        return df

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def read_csv(cls, path) -> "ScanTable":
        df = pd.read_csv(path, float_precision="round_trip")
        return cls(df[list(PARAMETERS)].to_numpy(), df["annual_cost_usd"].to_numpy(),
                   df["reliability"].to_numpy(), df["gas_share"].to_numpy())


@dataclass
class OptimumReport:
    status: str  # "optimal" or "infeasible"
    min_reliability: float
    max_gas_share: float
    evaluated_count: int
    feasible_count: int
    chosen: GridConfig | None = None
    annual_cost: float | None = None
    cost_breakdown: dict | None = None
    capacities: dict | None = None
    reliability: float | None = None
    gas_share: float | None = None
    lole_hours_per_year: float | None = None
    outages: dict | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chosen"] = None if self.chosen is None else asdict(self.chosen)
        return d

    def breakdown_frame(self) -> pd.DataFrame:
        return cost_breakdown_table(self.cost_breakdown or {}, self.capacities or {})


class _Checkpoint:
    """Append-only CSV of completed rows, headed by the scan's content hash."""

    columns = ("index", "reliability", "gas_share")

    def __init__(self, path, key: str):
        self.path = Path(path)
        self.key = key

    def load(self, size: int):
        if not self.path.exists():
            return 0, np.empty(size), np.empty(size)
        with self.path.open() as fh:
            header = fh.readline().strip()
        if header != f"# scan {self.key}":
            raise ConfigError(f"{self.path}: checkpoint belongs to a different scan or dataset")
        df = pd.read_csv(self.path, comment="#", float_precision="round_trip")
        done = len(df)
        if done > size or not np.array_equal(df["index"].to_numpy(), np.arange(done)):
            raise ConfigError(f"{self.path}: checkpoint rows are not a contiguous prefix")
        rel = np.empty(size)
        gas = np.empty(size)
        rel[:done] = df["reliability"].to_numpy()
        gas[:done] = df["gas_share"].to_numpy()
        return done, rel, gas

    def start(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(f"# scan {self.key}\n" + ",".join(self.columns) + "\n")

    def append(self, start: int, rel: np.ndarray, gas: np.ndarray):
        with self.path.open("a") as fh:
            for i, (r, g) in enumerate(zip(rel.tolist(), gas.tolist()), start):
                fh.write(f"{i},{r!r},{g!r}\n")


def evaluate_grid(spec: ScanSpec, dataset: GridDataset, *, workers: int = 1, checkpoint=None,
                  resume: bool = False, chunk_size: int = 4096, progress=None) -> ScanTable:
    """Simulate every grid point once and attach its annual cost.

    With ``checkpoint`` set, finished chunks are streamed to that file;
    ``resume=True`` continues from a matching checkpoint.
    """
    if len(dataset) == 0:
        raise DataIntegrityError("dataset is empty")
    params = spec.points()
    size = len(params)
    rel = np.empty(size)
    gas = np.empty(size)
    done = 0
    ckpt = None
    if checkpoint is not None:
        ckpt = _Checkpoint(checkpoint, spec.content_hash(dataset))
        if resume:
            done, rel, gas = ckpt.load(size)
            if done:
                log.info("resuming scan at point %d of %d", done, size)
        if not resume or done == 0:
            ckpt.start()
    for lo in range(done, size, chunk_size):
        hi = min(lo + chunk_size, size)
        r, g = simulate_many(params[lo:hi], dataset, workers=workers,
                             initial_storage=spec.initial_storage, storage_power=spec.storage_power)
        rel[lo:hi] = r
        gas[lo:hi] = g
        if ckpt is not None:
            ckpt.append(lo, r, g)
        if progress is not None:
            progress(hi, size)
    cost = point_costs(params, dataset.peak_demand, spec.costs, spec.financial)
    return ScanTable(params, cost, rel, gas)


def report_from_table(table: ScanTable, spec: ScanSpec, dataset: GridDataset,
                      min_reliability: float | None = None, max_gas_share: float | None = None) -> OptimumReport:
    """Pick the optimum under the given (or the scan's own) constraints."""
    min_rel = spec.min_reliability if min_reliability is None else min_reliability
    max_gas = spec.max_gas_share if max_gas_share is None else max_gas_share
    ok = table.feasible(min_rel, max_gas)
    report = OptimumReport(
        status="infeasible", min_reliability=min_rel, max_gas_share=max_gas,
        evaluated_count=len(table), feasible_count=int(ok.sum()),
    )
    best = table.best_index(min_rel, max_gas)
    if best is None:
        return report
    chosen = GridConfig(*table.params[best].tolist())
    total, breakdown = annual_system_cost(chosen, dataset.peak_demand, spec.costs, spec.financial)
    result = simulate(chosen, dataset, initial_storage=spec.initial_storage, storage_power=spec.storage_power)
    report.status = "optimal"
    report.chosen = chosen
    report.annual_cost = total
    report.cost_breakdown = breakdown
    report.capacities = installed_capacities(chosen, dataset.peak_demand)
    report.reliability = result.reliability
    report.gas_share = result.gas_share
    report.lole_hours_per_year = result.lole_hours_per_year
    report.outages = outage_summary(result)
    return report


def scan(spec: ScanSpec, dataset: GridDataset, *, workers: int = 1, checkpoint=None,
         resume: bool = False, chunk_size: int = 4096, progress=None):
    """Minimum-cost configuration meeting the scan's constraints.

    Returns the OptimumReport and the full ScanTable.  A scan with no
    feasible point yields ``status == "infeasible"`` rather than raising.
    """
    table = evaluate_grid(spec, dataset, workers=workers, checkpoint=checkpoint, resume=resume,
                          chunk_size=chunk_size, progress=progress)
    return report_from_table(table, spec, dataset), table


def _reliability(overbuild, wind_fraction, storage_energy, dataset, dispatch_capacity=0.0,
                 threshold_fraction=0.0, initial_storage=1.0):
    params = np.array([[overbuild, wind_fraction, storage_energy, dispatch_capacity, threshold_fraction]])
    rel, _ = simulate_many(params, dataset, initial_storage=initial_storage)
    return float(rel[0])


def required_overbuild(reliability_target: float, storage_energy: float, wind_fraction: float,
                       dataset: GridDataset, *, bracket=(0.0, 20.0), resolution: float = 0.01,
                       dispatch_capacity: float = 0.0, threshold_fraction: float = 0.0,
                       initial_storage: float = 1.0) -> float:
    """Smallest overbuild on a ``resolution`` grid reaching the reliability target.

    Bisects over grid indices, relying on reliability rising with
    overbuild.  Raises UnreachableTarget if the bracket top falls short.
    """
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi or resolution <= 0:
        raise ConfigError("bracket must satisfy 0 <= lo < hi and resolution > 0")
    steps = int(round((hi - lo) / resolution))

    def value(k):
        return round(lo + k * resolution, 12)

    def rel(k):
        return _reliability(value(k), wind_fraction, storage_energy, dataset, dispatch_capacity,
                            threshold_fraction, initial_storage)

    if rel(0) >= reliability_target:
        return value(0)
    top = rel(steps)
    if top < reliability_target:
        raise UnreachableTarget(reliability_target, value(steps), top)
    bad, good = 0, steps
    while good - bad > 1:
        mid = (bad + good) // 2
        if rel(mid) >= reliability_target:
            good = mid
        else:
            bad = mid
    return value(good)


def reliability_curve(overbuild_grid, wind_fraction_grid, dataset: GridDataset, *, workers: int = 1) -> pd.DataFrame:
    """Reliability with no storage or backup for each overbuild x wind-fraction pair.

    Rows are overbuild values, columns wind fractions.
    """
    ob = np.asarray(overbuild_grid, dtype=float)
    wf = np.asarray(wind_fraction_grid, dtype=float)
    if ob.size == 0 or wf.size == 0:
        raise ConfigError("curve grids must be non-empty")
    mesh = np.meshgrid(ob, wf, indexing="ij")
    params = np.zeros((mesh[0].size, 5))
    params[:, 0] = mesh[0].ravel()
    params[:, 1] = mesh[1].ravel()
    rel, _ = simulate_many(params, dataset, workers=workers)
    return pd.DataFrame(rel.reshape(ob.size, wf.size), index=pd.Index(ob, name="overbuild"),
                        columns=pd.Index(wf, name="wind_fraction"))


def overbuild_curve(targets, storage_grid, wind_fractions, dataset: GridDataset, **kwargs) -> pd.DataFrame:
    """Required overbuild per (target, storage); minimised over ``wind_fractions``.

    Unreachable cells are NaN.
    """
    rows = []
    for target in targets:
        for storage in storage_grid:
            best, best_wf = np.nan, np.nan
            for wf in np.atleast_1d(wind_fractions):
                try:
                    ob = required_overbuild(target, storage, float(wf), dataset, **kwargs)
                except UnreachableTarget:
                    continue
                if np.isnan(best) or ob < best:
                    best, best_wf = ob, float(wf)
            rows.append({"reliability_target": float(target), "storage_energy": float(storage),
                         "required_overbuild": best, "wind_fraction": best_wf})
    return pd.DataFrame(rows)
