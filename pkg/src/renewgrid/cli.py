"""Command-line entry point.

Exit codes: 0 success (an infeasible scan included), 1 input error,
2 internal invariant violation or unexpected failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

from .config import RunConfig, load_config
from .dispatch import GridConfig, simulate, verify_trace
from .errors import ConfigError, DataIntegrityError, InvariantViolation, RenewGridError
from .optimizer import overbuild_curve, reliability_curve, scan
from .pipeline import build_canonical_dataset
from .report import result_record, write_json, write_table
from .timeseries import read_dataset, write_dataset

log = logging.getLogger("renewgrid")

CHECKPOINT = "scan_checkpoint.csv"


def _echo(msg=""):
    print(msg, flush=True)


def _load_dataset(cfg: RunConfig):
    if cfg.dataset is None:
        raise ConfigError("config does not set paths.dataset")
    return read_dataset(cfg.dataset)


def _outdir(cfg: RunConfig) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def cmd_build_dataset(cfg: RunConfig, args) -> int:
    cfg.require("weather_dir", "demand_file")
    if cfg.dataset is None:
        raise ConfigError("config does not set paths.dataset")
    out = _outdir(cfg)
    dataset, summary, cached = build_canonical_dataset(cfg, cache_dir=out)
    cfg.dataset.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(cfg.dataset, dataset)
    write_json(out / "dataset_summary.json", summary)
    if cached:
        _echo("generation profiles: reused cache")
    _echo(f"wrote {cfg.dataset} ({summary['hours']} hours, {summary['cells']} cells)")
    _echo(f"epoch {summary['epoch_start']} .. {summary['epoch_end']}")
    _echo(f"peak demand {summary['peak_demand_GW']:.3f} GW, mean {summary['mean_demand_GW']:.3f} GW")
    return 0


def _grid_from_args(cfg: RunConfig, args) -> GridConfig:
    base = cfg.grid
    overrides = {k: getattr(args, k) for k in
                 ("overbuild", "wind_fraction", "storage_energy", "dispatch_capacity", "threshold_fraction")
                 if getattr(args, k) is not None}
    if base is None:
        if not {"overbuild", "wind_fraction"} <= set(overrides):
            raise ConfigError("no grid section in config; pass at least --overbuild and --wind-fraction")
        return GridConfig(**overrides)
    return replace(base, **overrides)


def cmd_simulate(cfg: RunConfig, args) -> int:
    dataset = _load_dataset(cfg)
    grid = _grid_from_args(cfg, args)
    result = simulate(grid, dataset, initial_storage=cfg.initial_storage,
                      storage_power=cfg.storage_power, trace=True)
    verify_trace(result.trace, grid)
    if not (0 <= result.reliability <= 1 and 0 <= result.gas_share <= 1):
        raise InvariantViolation("result metrics outside [0, 1]")
    out = _outdir(cfg)
    write_json(out / "simulation.json", result_record(result))
    if args.trace:
        result.trace.write_csv(out / "trace.csv")
        _echo(f"trace written to {out / 'trace.csv'}")
    _echo(f"reliability {result.reliability:.6f}  gas_share {result.gas_share:.6f}  "
          f"LOLE {result.lole_hours_per_year:.3f} h/yr  outages {len(result.outage_table)}")
    return 0


def cmd_scan(cfg: RunConfig, args) -> int:
    dataset = _load_dataset(cfg)
    spec = cfg.scan_spec()
    out = _outdir(cfg)
    chunk = int(cfg.scan.get("chunk_size", 4096))

    def progress(done, total):
        log.info("scan %d/%d", done, total)

    report, table = scan(spec, dataset, workers=cfg.workers, checkpoint=out / CHECKPOINT,
                         resume=args.resume, chunk_size=chunk, progress=progress)
    table.write_csv(out / "scan_table.csv")
    write_json(out / "optimum.json", report.to_dict())
    if not report.feasible:
        _echo(f"no feasible configuration among {report.evaluated_count} evaluated "
              f"(min_reliability={spec.min_reliability}, max_gas_share={spec.max_gas_share})")
        return 0
    write_table(out / "cost_breakdown.csv", report.breakdown_frame())
    hist = report.outages["duration_histogram"]
    write_table(out / "outage_durations.csv",
                pd.DataFrame({"duration_hours": list(hist), "count": list(hist.values())}))
    write_table(out / "outage_fraction_met.csv",
                pd.DataFrame({"energy_fraction_met": report.outages["fraction_met"]}))
    c = report.chosen
    _echo(f"optimum of {report.evaluated_count} points ({report.feasible_count} feasible): "
          f"annual cost ${report.annual_cost / 1e9:.3f}B")
    _echo(f"  overbuild {c.overbuild:g}  wind_fraction {c.wind_fraction:g}  storage {c.storage_energy:g} GWh  "
          f"dispatchable {c.dispatch_capacity:g} GW  threshold {c.threshold_fraction:g}")
    _echo(f"  reliability {report.reliability:.6f}  gas_share {report.gas_share:.6f}")
    return 0


def cmd_curve(cfg: RunConfig, args) -> int:
    dataset = _load_dataset(cfg)
    curve = cfg.curve
    if not curve:
        raise ConfigError("config has no curve section")
    out = _outdir(cfg)
    if "overbuild" in curve and "wind_fraction" in curve:
        table = reliability_curve(curve["overbuild"], curve["wind_fraction"], dataset, workers=cfg.workers)
        long = table.stack().rename("reliability").reset_index()
        write_table(out / "reliability_curve.csv", long)
        _echo(f"reliability curve: {table.shape[0]} x {table.shape[1]} points")
    if "targets" in curve:
        kwargs = {}
        if "bracket" in curve:
            kwargs["bracket"] = tuple(curve["bracket"])
        if "resolution" in curve:
            kwargs["resolution"] = float(curve["resolution"])
        wfs = curve.get("overbuild_wind_fraction", curve.get("wind_fraction", [0.5]))
        table = overbuild_curve(curve["targets"], curve.get("storage_energy", [0.0]), wfs, dataset,
                                initial_storage=cfg.initial_storage, **kwargs)
        write_table(out / "overbuild_curve.csv", table)
        _echo(f"overbuild curve: {len(table)} points")
    return 0


COMMANDS = {
    "build-dataset": cmd_build_dataset,
    "simulate": cmd_simulate,
    "scan": cmd_scan,
    "curve": cmd_curve,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--workers", type=int, help="parallel workers (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="renewgrid", description="Renewable grid simulation and least-cost capacity scans.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-dataset", parents=[common], help="weather + demand files -> canonical dataset")
    sim = sub.add_parser("simulate", parents=[common], help="run one grid configuration")
    sim.add_argument("--trace", action="store_true", help="write the per-hour trace")
    for name in ("overbuild", "wind-fraction", "storage-energy", "dispatch-capacity", "threshold-fraction"):
        sim.add_argument(f"--{name}", type=float, dest=name.replace("-", "_"))
    sc = sub.add_parser("scan", parents=[common], help="exhaustive minimum-cost scan")
    sc.add_argument("--resume", action="store_true", help="continue from a matching checkpoint")
    sub.add_parser("curve", parents=[common], help="reliability and required-overbuild tables")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be at least 1")
            cfg.workers = args.workers
        return COMMANDS[args.command](cfg, args)
    except InvariantViolation as exc:
        print(f"error: internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except (DataIntegrityError, ConfigError, FileNotFoundError, RenewGridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: unexpected failure: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
