"""Per-cell conversion of hourly weather into solar and wind output.

All functions broadcast over numpy arrays and accept scalars.  Angles are in
degrees, irradiance in W/m^2, temperatures in kelvin, speeds in m/s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, DataIntegrityError

WEATHER_COLUMNS = ("timestamp", "ghi", "toa", "t_amb", "v10", "v50", "p_surf", "lat", "lon")

# Huld et al. (2011) crystalline-silicon coefficients k1..k6
HULD_CSI = (-0.017237, -0.040465, -0.004702, 0.000149, 0.000170, 0.000005)

R_DRY_AIR = 287.05  # J/(kg K)
GRAVITY = 9.80665  # m/s^2
LAPSE_RATE = 0.0065  # K/m, standard-atmosphere troposphere
HORIZON_DEG = 1.0  # no direct beam below this solar altitude
KT_NOISE = 0.02  # tolerated relative excess of ghi over toa
STC_IRRADIANCE = 1000.0
STC_TEMP_C = 25.0


@dataclass(frozen=True)
class CellWeatherHour:
    """One hour of weather at one grid point."""

    ghi: float
    toa: float
    t_amb: float
    v10: float
    v50: float
    p_surf: float
    lat: float
    lon: float
    timestamp: np.datetime64


@dataclass(frozen=True)
class SolarPanelSpec:
    """Fixed, non-tracking PV panel.

    The tilt follows ``tilt_slope * |lat| + tilt_offset`` unless
    ``fixed_tilt`` is given.
    """

    eta_std: float = 0.21
    albedo: float = 0.3
    panel_azimuth: float = 180.0
    tilt_slope: float = 0.76
    tilt_offset: float = 3.1
    temp_coupling: float = 0.035
    huld_coefficients: tuple = HULD_CSI
    fixed_tilt: float | None = None

    def __post_init__(self):
        if not 0 < self.eta_std < 1:
            raise ConfigError(f"eta_std must lie in (0, 1), got {self.eta_std}")
        if not 0 <= self.albedo <= 1:
            raise ConfigError(f"albedo must lie in [0, 1], got {self.albedo}")
        if len(self.huld_coefficients) != 6:
            raise ConfigError("huld_coefficients needs exactly six values")
        object.__setattr__(self, "huld_coefficients", tuple(float(k) for k in self.huld_coefficients))
        if self.fixed_tilt is not None and not 0 <= self.fixed_tilt < 90:
            raise ConfigError(f"tilt must lie in [0, 90), got {self.fixed_tilt}")

    def tilt(self, lat):
        if self.fixed_tilt is not None:
            return np.full_like(np.asarray(lat, dtype=float), self.fixed_tilt)
        t = self.tilt_slope * np.abs(np.asarray(lat, dtype=float)) + self.tilt_offset
        if np.any((t < 0) | (t >= 90)):
            raise ConfigError("latitude-derived tilt falls outside [0, 90)")
        return t


@dataclass(frozen=True)
class TurbineSpec:
    rotor_diameter: float = 110.0
    hub_height: float = 100.0
    rated_power: float = 4.1  # MW
    cut_in: float = 3.0
    cut_out: float = 25.0
    cp: float = 0.40

    def __post_init__(self):
        if not 0 < self.cut_in < self.cut_out:
            raise ConfigError("need 0 < cut_in < cut_out")
        if self.rated_power <= 0:
            raise ConfigError("rated_power must be positive")
        if not 0 < self.cp < 16 / 27:
            raise ConfigError("cp must lie strictly between 0 and the Betz limit")
        if self.rotor_diameter <= 0 or self.hub_height <= 0:
            raise ConfigError("rotor_diameter and hub_height must be positive")

    @property
    def swept_area(self) -> float:
        return np.pi * (self.rotor_diameter / 2.0) ** 2


@dataclass
class CellWeather:
    """Columnar hourly weather series for a single grid point."""

    timestamps: np.ndarray
    ghi: np.ndarray
    toa: np.ndarray
    t_amb: np.ndarray
    v10: np.ndarray
    v50: np.ndarray
    p_surf: np.ndarray
    lat: float
    lon: float
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        for name in ("ghi", "toa", "t_amb", "v10", "v50", "p_surf"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def __len__(self):
        return len(self.timestamps)

    @classmethod
    def from_hours(cls, hours: Sequence[CellWeatherHour]) -> "CellWeather":
        if not hours:
            raise DataIntegrityError("no weather hours supplied")
        lats = {h.lat for h in hours}
        lons = {h.lon for h in hours}
        if len(lats) > 1 or len(lons) > 1:
            raise DataIntegrityError("hours span more than one grid point")
        cols = {n: [getattr(h, n) for h in hours] for n in ("ghi", "toa", "t_amb", "v10", "v50", "p_surf")}
        return cls(
            timestamps=np.array([np.datetime64(h.timestamp, "s") for h in hours]),
            lat=float(hours[0].lat), lon=float(hours[0].lon), **cols,
        )

    def validate(self):
        """Raise DataIntegrityError on gaps or unphysical values.

        Offending rows are reported as 1-based data-row indices.
        """
        check_hourly(self.timestamps, self.source or "weather series")
        bad = {
            "ghi < 0": self.ghi < 0,
            "toa < 0": self.toa < 0,
            "ghi > toa": self.ghi > self.toa * (1 + KT_NOISE),
            "v10 < 0": self.v10 < 0,
            "v50 < 0": self.v50 < 0,
            "p_surf <= 0": self.p_surf <= 0,
            "t_amb <= 0": self.t_amb <= 0,
        }
        for what, mask in bad.items():
            mask = mask | ~np.isfinite(getattr(self, what.split()[0]))
            if mask.any():
                rows = (np.flatnonzero(mask) + 1)[:10].tolist()
                raise DataIntegrityError(f"{self.source or 'weather'}: {what} at rows {rows}")
        return self


def check_hourly(timestamps: np.ndarray, what: str = "series"):
    ts = np.asarray(timestamps, dtype="datetime64[s]")
    if len(ts) == 0:
        raise DataIntegrityError(f"{what}: empty")
    steps = np.diff(ts).astype(np.int64)
    broken = np.flatnonzero(steps != 3600)
    if broken.size:
        i = int(broken[0])
        raise DataIntegrityError(f"{what}: non-hourly step between {ts[i]} and {ts[i + 1]}")


def _julian_day(timestamps):
    secs = np.asarray(timestamps, dtype="datetime64[s]").astype(np.int64)
    return secs / 86400.0 + 2440587.5, np.mod(secs, 86400) / 60.0


def solar_position(lat, lon, timestamps):
    """Geometric solar altitude and azimuth.

    Uses the NOAA low-order Meeus series (about 0.01 deg over 1950-2050),
    without atmospheric refraction.

    Returns
    -------
    altitude, azimuth : ndarray
        Degrees; azimuth is clockwise from north in [0, 360).
    """
    jd, minutes = _julian_day(timestamps)
    t = (jd - 2451545.0) / 36525.0
    l0 = np.mod(280.46646 + t * (36000.76983 + 0.0003032 * t), 360.0)
    m = np.radians(357.52911 + t * (35999.05029 - 0.0001537 * t))
    ecc = 0.016708634 - t * (0.000042037 + 0.0000001267 * t)
    centre = (
        np.sin(m) * (1.914602 - t * (0.004817 + 0.000014 * t))
        + np.sin(2 * m) * (0.019993 - 0.000101 * t)
        + np.sin(3 * m) * 0.000289
    )
    omega = np.radians(125.04 - 1934.136 * t)
    app_long = np.radians(l0 + centre - 0.00569 - 0.00478 * np.sin(omega))
    eps0 = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0
    eps = np.radians(eps0 + 0.00256 * np.cos(omega))
    decl = np.arcsin(np.sin(eps) * np.sin(app_long))

    y = np.tan(eps / 2) ** 2
    l0r = np.radians(l0)
    eot = 4.0 * np.degrees(
        y * np.sin(2 * l0r)
        - 2 * ecc * np.sin(m)
        + 4 * ecc * y * np.sin(m) * np.cos(2 * l0r)
        - 0.5 * y * y * np.sin(4 * l0r)
        - 1.25 * ecc * ecc * np.sin(2 * m)
    )
    true_solar = np.mod(minutes + eot + 4.0 * np.asarray(lon, dtype=float), 1440.0)
    ha = np.radians(true_solar / 4.0 - 180.0)

    phi = np.radians(np.asarray(lat, dtype=float))
    sin_alt = np.sin(phi) * np.sin(decl) + np.cos(phi) * np.cos(decl) * np.cos(ha)
    altitude = np.degrees(np.arcsin(np.clip(sin_alt, -1.0, 1.0)))
    azimuth = np.degrees(np.arctan2(
        np.sin(ha), np.cos(ha) * np.sin(phi) - np.tan(decl) * np.cos(phi)
    )) + 180.0
    return altitude, np.mod(azimuth, 360.0)


def clearness_index(ghi, toa):
    ghi = np.asarray(ghi, dtype=float)
    toa = np.asarray(toa, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        kt = np.where(toa > 0, ghi / np.where(toa > 0, toa, 1.0), 0.0)
    return np.clip(kt, 0.0, 1.0)


def diffuse_fraction(ghi, toa):
    """Diffuse horizontal irradiance from the logistic clearness-index model.

    Despite the name this returns DHI in W/m^2, i.e. ``ghi`` times the
    diffuse fraction.
    """
    ghi = np.asarray(ghi, dtype=float)
    kt = clearness_index(ghi, toa)
    return ghi / (1.0 + np.exp(-5.0033 + 8.6025 * kt))


def cos_incidence(altitude, azimuth, tilt, panel_azimuth):
    h = np.radians(altitude)
    t = np.radians(tilt)
    return np.sin(h) * np.cos(t) + np.cos(h) * np.sin(t) * np.cos(np.radians(panel_azimuth - azimuth))


def in_plane_components(ghi, toa, altitude, azimuth, tilt, panel: SolarPanelSpec):
    """Direct, sky-diffuse and ground-reflected irradiance on the panel plane."""
    ghi = np.asarray(ghi, dtype=float)
    altitude = np.asarray(altitude, dtype=float)
    t = np.radians(tilt)
    dhi = diffuse_fraction(ghi, toa)
    reflected = ghi * panel.albedo * (1.0 - np.cos(t)) / 2.0
    diffuse = dhi * (1.0 + np.cos(t)) / 2.0

    up = altitude >= HORIZON_DEG
    sin_h = np.where(up, np.sin(np.radians(altitude)), 1.0)
    dni = np.where(up, (ghi - dhi) / sin_h, 0.0)
    cos_aoi = np.maximum(cos_incidence(altitude, azimuth, tilt, panel.panel_azimuth), 0.0)
    direct = dni * cos_aoi
    return direct, diffuse, reflected


def in_plane_irradiance(ghi, toa, altitude, azimuth, tilt, panel: SolarPanelSpec):
    direct, diffuse, reflected = in_plane_components(ghi, toa, altitude, azimuth, tilt, panel)
    return direct + diffuse + reflected


def huld_relative_efficiency(irradiance, panel_temp_c, coefficients=HULD_CSI):
    """Relative efficiency, 1 at STC; zero where irradiance is zero."""
    k1, k2, k3, k4, k5, k6 = coefficients
    irradiance = np.asarray(irradiance, dtype=float)
    pos = irradiance > 0
    lg = np.log(np.where(pos, irradiance / STC_IRRADIANCE, 1.0))
    dt = np.asarray(panel_temp_c, dtype=float) - STC_TEMP_C
    eta = 1.0 + k1 * lg + k2 * lg**2 + dt * (k3 + k4 * lg + k5 * lg**2) + k6 * dt**2
    return np.where(pos, np.maximum(eta, 0.0), 0.0)


def pv_power_per_m2(i_tot, t_amb, panel: SolarPanelSpec):
    i_tot = np.asarray(i_tot, dtype=float)
    panel_temp_c = np.asarray(t_amb, dtype=float) - 273.15 + panel.temp_coupling * i_tot
    eta_rel = huld_relative_efficiency(i_tot, panel_temp_c, panel.huld_coefficients)
    return panel.eta_std * eta_rel * np.maximum(i_tot, 0.0)


def wind_speed_at_hub(v10, v50, hub_height=100.0):
    """Extrapolate to hub height with an hourly power-law shear exponent.

    The exponent comes from the 10 m / 50 m pair; when either level is calm
    the 50 m speed is returned unscaled.
    """
    v10 = np.asarray(v10, dtype=float)
    v50 = np.asarray(v50, dtype=float)
    ok = (v10 > 0) & (v50 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(ok, np.log(np.where(ok, v50 / np.where(ok, v10, 1.0), 1.0)) / np.log(5.0), 0.0)
    return np.where(ok, v50 * (hub_height / 50.0) ** alpha, v50)


def air_density_at_hub(t_amb, p_surf, hub_height=100.0):
    """Air density at hub height from the standard-atmosphere barometric law."""
    t_amb = np.asarray(t_amb, dtype=float)
    p_surf = np.asarray(p_surf, dtype=float)
    t_hub = t_amb - LAPSE_RATE * hub_height
    p_hub = p_surf * (t_hub / t_amb) ** (GRAVITY / (R_DRY_AIR * LAPSE_RATE))
    return p_hub / (R_DRY_AIR * t_hub)


def turbine_power(v_hub, rho, turbine: TurbineSpec):
    """Turbine output in MW."""
    v = np.asarray(v_hub, dtype=float)
    aero = 0.5 * np.asarray(rho, dtype=float) * turbine.swept_area * turbine.cp * v**3 / 1e6
    running = (v > turbine.cut_in) & (v < turbine.cut_out)
    return np.where(running, np.minimum(aero, turbine.rated_power), 0.0)


def cell_capacity_factors(hours, panel: SolarPanelSpec | None = None, turbine: TurbineSpec | None = None):
    """Hourly solar and wind capacity factors for one grid point.

    Parameters
    ----------
    hours : CellWeather or sequence of CellWeatherHour
        Chronologically contiguous hourly weather.

    Returns
    -------
    solar_cf, wind_cf : ndarray
        Output normalised by nameplate, clipped to [0, 1].
    """
    panel = panel or SolarPanelSpec()
    turbine = turbine or TurbineSpec()
    weather = hours if isinstance(hours, CellWeather) else CellWeather.from_hours(list(hours))
    weather.validate()

    alt, az = solar_position(weather.lat, weather.lon, weather.timestamps)
    tilt = panel.tilt(weather.lat)
    i_tot = in_plane_irradiance(weather.ghi, weather.toa, alt, az, tilt, panel)
    solar = pv_power_per_m2(i_tot, weather.t_amb, panel) / (panel.eta_std * STC_IRRADIANCE)

    v_hub = wind_speed_at_hub(weather.v10, weather.v50, turbine.hub_height)
    rho = air_density_at_hub(weather.t_amb, weather.p_surf, turbine.hub_height)
    wind = turbine_power(v_hub, rho, turbine) / turbine.rated_power
    return np.clip(solar, 0.0, 1.0), np.clip(wind, 0.0, 1.0)


def read_weather_csv(path) -> CellWeather:
    """Read a per-cell weather file with a header naming the weather fields."""
    path = Path(path)
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataIntegrityError(f"{path}: unreadable weather file ({exc})") from exc
    missing = [c for c in WEATHER_COLUMNS if c not in df.columns]
    if missing:
        raise DataIntegrityError(f"{path}: missing columns {missing}")
    numeric = df[list(WEATHER_COLUMNS[1:])].apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    ts = pd.to_datetime(df["timestamp"], utc=True, errors="coerce")
    bad |= ts.isna().to_numpy()
    if bad.any():
        lines = (np.flatnonzero(bad) + 2)[:10].tolist()
        raise DataIntegrityError(f"{path}: missing or malformed values on lines {lines}")
    if numeric["lat"].nunique() != 1 or numeric["lon"].nunique() != 1:
        raise DataIntegrityError(f"{path}: file must hold a single grid point")
    weather = CellWeather(
        timestamps=ts.dt.tz_localize(None).to_numpy().astype("datetime64[s]"),
        ghi=numeric["ghi"].to_numpy(), toa=numeric["toa"].to_numpy(),
        t_amb=numeric["t_amb"].to_numpy(), v10=numeric["v10"].to_numpy(),
        v50=numeric["v50"].to_numpy(), p_surf=numeric["p_surf"].to_numpy(),
        lat=float(numeric["lat"].iloc[0]), lon=float(numeric["lon"].iloc[0]),
        source=str(path),
    )
    return weather.validate()


def write_capacity_factors(path, timestamps, solar_cf, wind_cf):
    df = pd.DataFrame({
        "timestamp": pd.to_datetime(np.asarray(timestamps, dtype="datetime64[s]")).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "solar_cf": solar_cf,
        "wind_cf": wind_cf,
    })
    df.to_csv(path, index=False, float_format="%.10g")
