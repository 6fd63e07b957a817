"""Weather to capacity factors for one grid point.

Run with ``python demos/power_models_tour.py``.
"""
import numpy as np

from renewgrid import SolarPanelSpec, TurbineSpec, pv_power_per_m2, solar_position, turbine_power

# sun over Berlin on the June solstice, every two hours
hours = np.arange("2022-06-21T00", "2022-06-22T00", 2, dtype="datetime64[h]")
alt, az = solar_position(52.5, 13.4, hours)
for t, a, z in zip(hours, alt, az):
    print(f"{t}  altitude {a:6.2f}  azimuth {z:6.2f}")

# panel output falls off with temperature
panel = SolarPanelSpec()
for t_c in (0, 25, 45):
    watts = pv_power_per_m2(800.0, 273.15 + t_c, panel)
    print(f"800 W/m2 at {t_c:2d} C ambient -> {watts:6.1f} W/m2")

# the turbine curve, with cut-in, rated plateau and cut-out
turbine = TurbineSpec()
speeds = np.array([2.0, 3.0, 5.0, 8.0, 10.0, 12.0, 15.0, 24.9, 25.0])
print("v (m/s):", speeds)
print("P (MW): ", np.round(turbine_power(speeds, 1.225, turbine), 3))
