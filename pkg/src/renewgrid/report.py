"""Plot-ready summaries and deterministic file writers."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

FRACTION_BINS = np.linspace(0.0, 1.0, 11)


def duration_histogram(durations) -> dict:
    """Outage count per duration in hours."""
    d, counts = np.unique(np.asarray(durations, dtype=np.int64), return_counts=True)
    return {int(k): int(v) for k, v in zip(d, counts)}


def fraction_met_histogram(fractions, bins=FRACTION_BINS) -> dict:
    counts, edges = np.histogram(np.asarray(fractions, dtype=float), bins=bins)
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def outage_summary(result) -> dict:
    """Outage statistics of a SimulationResult for reporting.

    ``fraction_met`` lists, per outage, the share of demand served across
    the whole event.
    """
    table = result.outage_table
    fractions = table.energy_fraction_met
    hourly = table.hourly_fraction_met
    return {
        "count": int(len(table)),
        "outage_hours": int(table.durations.sum()),
        "longest_hours": int(table.durations.max()) if len(table) else 0,
        "min_hourly_fraction_met": float(hourly.min()) if len(hourly) else None,
        "duration_histogram": duration_histogram(table.durations),
        "fraction_met": [float(f) for f in fractions],
        "fraction_met_histogram": fraction_met_histogram(fractions),
    }


def result_record(result) -> dict:
    """Machine-readable record of a single simulation."""
    events = [
        {
            "start": e.start,
            "duration": e.duration,
            "energy_fraction_met": e.energy_fraction_met,
            "min_fraction_met": e.min_fraction_met,
            "hourly_fraction_met": list(e.hourly_fraction_met),
        }
        for e in result.outages
    ]
    return {
        "config": _config_dict(result.config),
        "hours": result.hours,
        "reliability": result.reliability,
        "gas_share": result.gas_share,
        "lole_hours_per_year": result.lole_hours_per_year,
        "metadata": {"initial_storage_fraction": result.initial_storage},
        "outage_summary": outage_summary(result),
        "outages": events,
    }


def _config_dict(config) -> dict:
    return {
        "overbuild": config.overbuild,
        "wind_fraction": config.wind_fraction,
        "storage_energy": config.storage_energy,
        "dispatch_capacity": config.dispatch_capacity,
        "threshold_fraction": config.threshold_fraction,
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path, payload: dict):
    """Write sorted-key JSON so reruns are byte-identical."""
    text = json.dumps(_clean(payload), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")


def write_table(path, frame: pd.DataFrame):
    frame.to_csv(path, index=False, float_format="%.17g")


def cost_breakdown_table(breakdown: dict, capacities: dict) -> pd.DataFrame:
    return pd.DataFrame({
        "tech": list(breakdown),
        "installed": [capacities[t] for t in breakdown],
        "annual_cost_usd": [breakdown[t] for t in breakdown],
    })
