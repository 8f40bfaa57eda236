"""Meta-Immersion: attention-weighted log QoE gated by normalized link KPIs.

MI = T(rate) * T(1 - BEP) * sum(K_n * ln(P_n / floor)). Normalized factors
are deliberately not clamped; out-of-range KPIs yield values outside [0, 1]
and are flagged so optimization gradients stay informative.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import allocation as alloc_mod
from . import mimo
from .types import KpiBounds, LinkParams, ModulationScheme, ResourceBundle

__all__ = [
    "normalize",
    "meta_immersion",
    "meta_immersion_report",
    "latency_hook",
    "MiEvaluator",
    "ConcavityReport",
    "concavity_probe",
]


def normalize(t: float, t_min: float, t_max: float) -> float:
    """Affine normalization (t - t_min) / (t_max - t_min); never clamped."""
    if not t_max > t_min:
        raise ValueError("t_max must exceed t_min")
    return (t - t_min) / (t_max - t_min)


def meta_immersion_report(
    rate: float,
    bep: float,
    bounds: KpiBounds,
    attention,
    allocation,
    floor: float,
    clamp: bool = False,
) -> tuple[float, tuple]:
    """MI value plus flags for out-of-range normalized KPI factors.

    With ``clamp`` the factors are clipped to [0, 1]: a link below its KPI
    floor delivers no immersion instead of a sign-flipped product. Flags
    still report the raw excursion.
    """
    t_rate = normalize(rate, bounds.rate_min, bounds.rate_max)
    t_bep = normalize(1.0 - bep, 1.0 - bounds.bep_max, 1.0 - bounds.bep_min)
    render = alloc_mod.objective(attention, allocation, floor)
    flags = []
    if not 0.0 <= t_rate <= 1.0:
        flags.append("rate out of bounds")
    if not 0.0 <= t_bep <= 1.0:
        flags.append("bep out of bounds")
    if clamp:
        t_rate = min(max(t_rate, 0.0), 1.0)
        t_bep = min(max(t_bep, 0.0), 1.0)
    return t_rate * t_bep * render, tuple(flags)


def meta_immersion(
    rate: float,
    bep: float,
    bounds: KpiBounds,
    attention,
    allocation,
    floor: float,
    clamp: bool = False,
) -> float:
    return meta_immersion_report(
        rate, bep, bounds, attention, allocation, floor, clamp
    )[0]


def latency_hook(mi: float, latency: float, latency_max: float) -> float:
    """Scale MI by the normalized latency headroom T(L_max - L).

    Latency beyond the tolerable maximum forces MI to 0.
    """
    if latency > latency_max:
        return 0.0
    return mi * normalize(latency_max - latency, 0.0, latency_max)


@dataclass(frozen=True)
class MiEvaluator:
    """Closed-form MI as a function of the four-dimensional resource bundle.

    Rendering is re-optimized by water-filling at every evaluation.
    """

    link: LinkParams
    bounds: KpiBounds
    attention: tuple
    render_floor: float
    mod: ModulationScheme
    zeta_down: float
    zeta_up: float

    def kpis(self, bundle: ResourceBundle) -> tuple[float, float]:
        link = dataclasses.replace(
            self.link,
            tx_power_down=bundle.power_down,
            bandwidth_hz=bundle.bandwidth,
            tx_power_up=bundle.power_up,
        )
        rate = mimo.downlink_rate(link, self.zeta_down)
        bep = mimo.uplink_bep(link, self.zeta_up, self.mod)
        return rate, max(bep, 1e-300)

    def allocate(self, render_total: float) -> np.ndarray:
        problem = alloc_mod.AllocationProblem(
            attention=tuple(self.attention),
            total=render_total,
            floor=self.render_floor,
        )
        return alloc_mod.water_fill(problem)

    def mi(self, bundle: ResourceBundle, clamp: bool = False) -> float:
        rate, bep = self.kpis(bundle)
        allocation = self.allocate(bundle.render_total)
        return meta_immersion(
            rate, bep, self.bounds, self.attention, allocation, self.render_floor, clamp
        )


@dataclass(frozen=True)
class ConcavityReport:
    resource: str
    grid: tuple
    values: tuple
    second_derivatives: tuple
    max_second_derivative: float
    scale: float

    @property
    def max_normalized(self) -> float:
        return self.max_second_derivative / self.scale if self.scale else 0.0


_RESOURCE_FIELDS = {
    "power_down": "power_down",
    "bandwidth": "bandwidth",
    "power_up": "power_up",
    "render_total": "render_total",
}


def concavity_probe(
    resource: str, evaluator: MiEvaluator, base: ResourceBundle, grid
) -> ConcavityReport:
    """Central finite-difference second derivatives of MI along one resource.

    Rendering capacity is re-optimized at every grid point. The reported
    scale is max|MI| so tolerances can be stated per unit MI.
    """
    if resource not in _RESOURCE_FIELDS:
        raise ValueError(f"unknown resource {resource!r}")
    grid = np.asarray(grid, dtype=float)
    if grid.size < 5:
        raise ValueError("grid must contain at least 5 points")
    values = []
    for x in grid:
        bundle = dataclasses.replace(base, **{_RESOURCE_FIELDS[resource]: float(x)})
        values.append(evaluator.mi(bundle))
    values = np.asarray(values)
    h = np.diff(grid)
    if not np.allclose(h, h[0]):
        raise ValueError("grid must be uniform")
    second = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / h[0] ** 2
    scale = float(np.max(np.abs(values))) or 1.0
    return ConcavityReport(
        resource=resource,
        grid=tuple(float(x) for x in grid),
        values=tuple(float(v) for v in values),
        second_derivatives=tuple(float(d) for d in second),
        max_second_derivative=float(second.max()),
        scale=scale,
    )
