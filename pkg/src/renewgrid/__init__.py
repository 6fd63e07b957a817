"""Hourly renewable grid simulation and least-cost capacity scans.

Weather cells are converted to solar and wind capacity factors, aggregated
to a regional dataset, and run through a myopic storage + dispatchable
backup model; exhaustive scans pick the cheapest mix meeting reliability
and backup-share constraints.
"""
from .costing import (DEFAULT_COSTS, FinancialParams, TechnologyCosting, annual_payment,
                      annual_system_cost, investment_cost, unit_annual_cost)
from .dispatch import (GridConfig, HourState, OutageEvent, SimulationResult, myopia_check, simulate,
                       simulate_many, step, verify_trace)
from .errors import ConfigError, DataIntegrityError, InvariantViolation, RenewGridError, UnreachableTarget
from .optimizer import (OptimumReport, ScanSpec, ScanTable, overbuild_curve, reliability_curve,
                        required_overbuild, scan)
from .power_models import (CellWeather, CellWeatherHour, SolarPanelSpec, TurbineSpec, air_density_at_hub,
                           cell_capacity_factors, diffuse_fraction, in_plane_irradiance, pv_power_per_m2,
                           solar_position, turbine_power, wind_speed_at_hub)
from .timeseries import (DemandSeries, GenerationProfile, GridDataset, aggregate_area_average,
                         aggregate_capacity_weighted, read_dataset, repair_demand, replicate_demand_year,
                         synthetic_dataset, write_dataset)

__version__ = "0.1.0"
