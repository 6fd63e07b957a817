"""Six hours of storage and backup dispatch, printed hour by hour.

Run with ``python demos/dispatch_toy.py``.
"""
import numpy as np

from renewgrid import GridConfig, GridDataset, simulate

# 1 GW peak demand; solar only, overbuilt twice
ds = GridDataset(solar_cf=np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0]), wind_cf=np.zeros(6), demand=np.ones(6))
cfg = GridConfig(overbuild=2.0, wind_fraction=0.0, storage_energy=1.0, dispatch_capacity=0.5,
                 threshold_fraction=0.5)
res = simulate(cfg, ds, initial_storage=0.0, trace=True)

print(res.trace.to_frame().to_string(index=False))
print(f"reliability {res.reliability:.2f}, backup share {res.gas_share:.2f}")
for ev in res.outages:
    print(f"outage from hour {ev.start}, {ev.duration} h, hourly fraction met {ev.hourly_fraction_met}")

# with a 100% gate stored energy is never released, so the dark hours rely
# on the backup alone
full = simulate(GridConfig(2.0, 0.0, 1.0, 0.5, 1.0), ds, initial_storage=0.0)
print(f"threshold 1.0: reliability {full.reliability:.2f}, backup share {full.gas_share:.2f}")
