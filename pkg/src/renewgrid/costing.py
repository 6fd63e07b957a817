"""Annualised system cost from overnight capital, construction finance and O&M.

Costs are per kW of nameplate (per kWh for storage); installed quantities
arrive in GW or GWh and are converted here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import ConfigError

TECHNOLOGIES = ("solar", "wind", "storage", "dispatchable")
KW_PER_GW = 1e6


@dataclass(frozen=True)
class TechnologyCosting:
    """Overnight cost ($/kW or $/kWh), fixed O&M ($/kW-yr or $/kWh-yr), lifetime (yr)."""

    tech: str
    overnight: float
    fixed_om: float
    lifetime: float

    def __post_init__(self):
        if self.tech not in TECHNOLOGIES:
            raise ConfigError(f"unknown technology {self.tech!r}")
        if self.overnight <= 0 or self.fixed_om <= 0:
            raise ConfigError(f"{self.tech}: costs must be positive")
        if self.lifetime < 1:
            raise ConfigError(f"{self.tech}: lifetime must be at least one year")


@dataclass(frozen=True)
class FinancialParams:
    build_time: float = 2.0
    inflation: float = 0.04
    nominal_rate: float = 0.08

    def __post_init__(self):
        if self.build_time <= 0:
            raise ConfigError("build_time must be positive")
        if not self.nominal_rate >= self.inflation >= 0:
            raise ConfigError("need nominal_rate >= inflation >= 0")

    @property
    def real_rate(self) -> float:
        return self.nominal_rate - self.inflation


# 2025 dollars
DEFAULT_COSTS = {
    "solar": TechnologyCosting("solar", 790.0, 10.0, 25),
    "wind": TechnologyCosting("wind", 1540.0, 40.0, 25),
    "storage": TechnologyCosting("storage", 200.0, 10.0, 15),
    "dispatchable": TechnologyCosting("dispatchable", 1000.0, 20.0, 30),
}


def _parabolic_kernel(x: float) -> float:
    """(e^x (x - 2) + x + 2) / x^3, i.e. the integral of s(1-s)e^(xs) over [0, 1]."""
    if abs(x) < 0.5:
        # sum_n (n+1) x^n / (n+3)!
        term = 1.0 / 6.0
        total = term
        n = 0
        while abs(term) > 1e-18 * abs(total):
            term *= x * (n + 2) / ((n + 1) * (n + 4))
            total += term
            n += 1
            if n > 60:
                break
        return total
    return (math.exp(x) * (x - 2.0) + x + 2.0) / x**3


def investment_cost(overnight: float, fin: FinancialParams = FinancialParams()) -> float:
    """Capital cost at construction start for a parabolic spending profile.

    Spending over the build time follows tau*(T - tau), inflated at the
    inflation rate and discounted at the nominal rate, normalised so that
    zero rates return ``overnight``.
    """
    T = fin.build_time
    x = (fin.inflation - fin.nominal_rate) * T
    return overnight * 6.0 * _parabolic_kernel(x)


def annual_payment(p0: float, rate: float, lifetime: float) -> float:
    """Capital recovery payment per year for a continuously compounded rate."""
    if lifetime < 1:
        raise ConfigError("lifetime must be at least one year")
    if rate == 0.0:
        return p0 / lifetime
    if math.isinf(lifetime):
        return p0 * math.expm1(rate)
    return p0 * math.expm1(rate) / -math.expm1(-rate * lifetime)


def unit_annual_cost(costing: TechnologyCosting, fin: FinancialParams = FinancialParams()) -> float:
    """Annualised capital plus fixed O&M per kW (per kWh for storage)."""
    p0 = investment_cost(costing.overnight, fin)
    return annual_payment(p0, fin.real_rate, costing.lifetime) + costing.fixed_om


def merged_costs(overrides: Mapping | None = None) -> dict:
    """Default cost table with per-technology field overrides applied."""
    costs = dict(DEFAULT_COSTS)
    for tech, fields_ in (overrides or {}).items():
        if tech not in costs:
            raise ConfigError(f"unknown technology {tech!r}")
        if isinstance(fields_, TechnologyCosting):
            costs[tech] = fields_
        else:
            costs[tech] = replace(costs[tech], **dict(fields_))
    return costs


def installed_capacities(config, peak_demand: float) -> dict:
    """Installed GW (GWh for storage) implied by a grid configuration."""
    return {
        "solar": config.overbuild * (1.0 - config.wind_fraction) * peak_demand,
        "wind": config.overbuild * config.wind_fraction * peak_demand,
        "storage": config.storage_energy,
        "dispatchable": config.dispatch_capacity,
    }


def annual_system_cost(config, peak_demand: float, costs: Mapping | None = None,
                       fin: FinancialParams = FinancialParams()):
    """Total annual cost in $/yr and its per-technology breakdown."""
    costs = merged_costs(costs)
    caps = installed_capacities(config, peak_demand)
    breakdown = {t: caps[t] * KW_PER_GW * unit_annual_cost(costs[t], fin) for t in TECHNOLOGIES}
    total = 0.0
    for t in TECHNOLOGIES:
        total += breakdown[t]
    return total, breakdown
