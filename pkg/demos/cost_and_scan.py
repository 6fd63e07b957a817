"""Annualized costs, a small least-cost scan and a required-overbuild curve.

Uses synthetic data, so the numbers illustrate the workflow only.
Run with ``python demos/cost_and_scan.py``.
"""
import numpy as np

from renewgrid import (DEFAULT_COSTS, FinancialParams, GridConfig, ScanSpec, annual_payment,
                       annual_system_cost, investment_cost, overbuild_curve, scan, synthetic_dataset)

for name, tech in DEFAULT_COSTS.items():
    print(f"{name:8s} overnight {tech.overnight:7.1f}  lifetime {tech.lifetime} y")

# construction interest and the capital recovery factor
fin = FinancialParams(2, 0.04, 0.08)
capital = investment_cost(790, fin)
print(f"790 $/kW overnight -> {capital:.2f} $/kW at commissioning -> "
      f"{annual_payment(capital, 0.04, 25):.2f} $/kW-yr")

ds = synthetic_dataset(8760, seed=1)
total, parts = annual_system_cost(GridConfig(4.0, 0.6, 3000.0, 100.0, 0.1), ds.peak_demand)
print(f"x4 build, 3 TWh storage, 100 GW backup: {total / 1e9:.1f} bn$/yr")
print({k: round(v / 1e9, 1) for k, v in parts.items()})

spec = ScanSpec(overbuild=np.arange(2.0, 8.5, 0.5), wind_fraction=np.linspace(0.2, 1.0, 9),
                storage_energy=[0.0, 1500.0, 3000.0, 6000.0], dispatch_capacity=[0.0, 100.0, 200.0],
                threshold_fraction=[0.0, 0.1], min_reliability=0.99, max_gas_share=0.05)
report, table = scan(spec, ds)
print(f"{report.evaluated_count} configurations, {report.feasible_count} feasible")
if report.feasible:
    print(f"cheapest: {report.chosen}, {report.annual_cost / 1e9:.1f} bn$/yr, "
          f"reliability {report.reliability:.4f}, backup share {report.gas_share:.4f}")

curve = overbuild_curve([0.95, 0.99], [0.0, 2000.0, 6000.0], np.linspace(0.3, 0.9, 4), ds, bracket=(0.0, 15.0))
print(curve.to_string(index=False))
