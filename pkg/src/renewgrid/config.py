"""Run configuration: one YAML document plus environment overrides."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .costing import FinancialParams, merged_costs
from .dispatch import GridConfig
from .errors import ConfigError
from .optimizer import ScanSpec
from .power_models import SolarPanelSpec, TurbineSpec

ENV_OVERRIDES = {
    "RENEWGRID_WEATHER_DIR": "weather_dir",
    "RENEWGRID_DEMAND_FILE": "demand_file",
    "RENEWGRID_DATASET": "dataset",
    "RENEWGRID_OUTPUT_DIR": "output_dir",
}


def _grid_values(raw, name):
    """A list of values, or a ``{start, stop, step}`` mapping (stop inclusive)."""
    if isinstance(raw, dict):
        try:
            start, stop, step = float(raw["start"]), float(raw["stop"]), float(raw["step"])
        except KeyError as exc:
            raise ConfigError(f"scan.{name}: range needs start, stop and step") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"scan.{name}: need step > 0 and stop >= start")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    if isinstance(raw, (int, float)):
        return [float(raw)]
    return [float(v) for v in raw]


@dataclass
class RunConfig:
    weather_dir: Path | None = None
    demand_file: Path | None = None
    dataset: Path | None = None
    output_dir: Path = Path("output")
    workers: int = 1
    panel: SolarPanelSpec = field(default_factory=SolarPanelSpec)
    turbine: TurbineSpec = field(default_factory=TurbineSpec)
    aggregation: str = "area"
    capacity_weights: dict = field(default_factory=dict)
    min_demand_coverage: float = 8700 / 8760
    costs: dict = field(default_factory=merged_costs)
    financial: FinancialParams = field(default_factory=FinancialParams)
    grid: GridConfig | None = None
    initial_storage: float = 1.0
    storage_power: float | None = None
    scan: dict = field(default_factory=dict)
    curve: dict = field(default_factory=dict)

    def require(self, *names):
        """Check that the named path fields are set and exist."""
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"config does not set paths.{name}")
            if not Path(value).exists():
                raise FileNotFoundError(f"{name} not found: {value}")

    def scan_spec(self) -> ScanSpec:
        raw = dict(self.scan)
        if not raw:
            raise ConfigError("config has no scan section")
        grids = {}
        for name in ("overbuild", "wind_fraction", "storage_energy", "dispatch_capacity", "threshold_fraction"):
            if name in raw:
                grids[name] = _grid_values(raw[name], name)
        for name in ("overbuild", "wind_fraction"):
            if name not in grids:
                raise ConfigError(f"scan.{name} is required")
        return ScanSpec(
            **grids,
            min_reliability=float(raw.get("min_reliability", 0.0)),
            max_gas_share=float(raw.get("max_gas_share", 1.0)),
            costs=self.costs,
            financial=self.financial,
            initial_storage=self.initial_storage,
            storage_power=self.storage_power,
        )


def _resolve(base: Path, value):
    if value is None:
        return None
    p = Path(os.path.expandvars(str(value))).expanduser()
    return p if p.is_absolute() else base / p


def load_config(path=None, env=None) -> RunConfig:
    """Read a YAML run configuration; relative paths are taken from its directory."""
    env = os.environ if env is None else env
    raw = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        base = path.parent

    paths = dict(raw.get("paths") or {})
    for var, key in ENV_OVERRIDES.items():
        if env.get(var):
            paths[key] = env[var]
    workers = env.get("RENEWGRID_WORKERS") or raw.get("workers", 1)

    try:
        agg = dict(raw.get("aggregation") or {})
        sim = dict(raw.get("simulation") or {})
        fin = dict(raw.get("financial") or {})
        cfg = RunConfig(
            weather_dir=_resolve(base, paths.get("weather_dir")),
            demand_file=_resolve(base, paths.get("demand_file")),
            dataset=_resolve(base, paths.get("dataset")),
            output_dir=_resolve(base, paths.get("output_dir", "output")),
            workers=int(workers),
            panel=SolarPanelSpec(**(raw.get("panel") or {})),
            turbine=TurbineSpec(**(raw.get("turbine") or {})),
            aggregation=agg.get("mode", "area"),
            capacity_weights=dict(agg.get("weights") or {}),
            min_demand_coverage=float((raw.get("demand") or {}).get("min_coverage", 8700 / 8760)),
            costs=merged_costs(raw.get("costs") or {}),
            financial=FinancialParams(**fin),
            grid=GridConfig(**raw["grid"]) if raw.get("grid") else None,
            initial_storage=float(sim.get("initial_storage", 1.0)),
            storage_power=None if sim.get("storage_power") is None else float(sim["storage_power"]),
            scan=dict(raw.get("scan") or {}),
            curve=dict(raw.get("curve") or {}),
        )
    except TypeError as exc:
        raise ConfigError(f"unrecognised configuration field: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.aggregation not in ("area", "capacity_weighted"):
        raise ConfigError(f"aggregation.mode must be 'area' or 'capacity_weighted', got {cfg.aggregation!r}")
    if cfg.aggregation == "capacity_weighted" and not {"solar", "wind"} <= set(cfg.capacity_weights):
        raise ConfigError("capacity_weighted aggregation needs weights for solar and wind")
    return cfg
