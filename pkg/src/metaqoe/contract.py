"""Two-level contract design between the service and infrastructure providers.

Inner level: for a given per-QoE fee the infrastructure provider picks the
resource bundle maximizing fee * MI - resource cost per user (the fixed fee
is additive and cannot change the argmax). Outer level: exhaustive grid
search over (fixed fee, per-QoE fee) keeping only contracts that clear the
provider's utility floor, maximizing the service provider's utility.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .qoe import MiEvaluator
from .types import ContractTerms, MarketConstants, ResourceBundle, UnitPrices

__all__ = [
    "InfeasibleContractError",
    "ResourceBox",
    "InnerSearchConfig",
    "ContractScenario",
    "ContractSolution",
    "inp_revenue",
    "inp_utility",
    "crra",
    "msp_utility",
    "optimize_inner",
    "optimize_contract",
]

NEG_INF = float("-inf")


class InfeasibleContractError(RuntimeError):
    """No grid point satisfies the provider's participation constraint."""


def inp_revenue(contract: ContractTerms, mi_values) -> float:
    """Fixed fee plus the per-QoE fee times total MI."""
    return contract.fixed_fee + contract.per_qoe_fee * float(np.sum(mi_values))


def crra(wealth: float, rra: float) -> float:
    """Constant-relative-risk-aversion utility W^(1-tau)/(1-tau).

    Risk neutrality (tau = 0) reduces to the identity. Nonpositive wealth
    under tau > 0 is reported as -inf (infeasible contract).
    """
    if rra == 0.0:
        return wealth
    if wealth <= 0.0:
        return NEG_INF
    return wealth ** (1.0 - rra) / (1.0 - rra)


def inp_utility(
    contract: ContractTerms,
    bundles,
    prices: UnitPrices,
    market: MarketConstants,
    mi_values,
) -> float:
    """CRRA utility of revenue minus total quadratic resource cost."""
    cost = sum(prices.cost(b) for b in bundles)
    wealth = inp_revenue(contract, mi_values) - cost
    return crra(wealth, market.rra)


def msp_utility(
    contract: ContractTerms, market: MarketConstants, mi_values
) -> float:
    """Service-provider utility: user fees net of the contract payment."""
    mi = np.asarray(mi_values, dtype=float)
    omega = np.asarray(market.base_fee_per_user, dtype=float)
    mu_fee = np.asarray(market.qoe_fee_per_user, dtype=float)
    return float(np.sum(omega + (mu_fee - contract.per_qoe_fee) * mi)) - contract.fixed_fee


@dataclass(frozen=True)
class ResourceBox:
    """Per-dimension lower/upper bounds for the resource search."""

    lower: ResourceBundle
    upper: ResourceBundle

    def __post_init__(self):
        lo, hi = self.lower.as_array(), self.upper.as_array()
        if np.any(hi < lo):
            raise ValueError("upper bounds must dominate lower bounds")

    def clip(self, arr: np.ndarray) -> np.ndarray:
        return np.clip(arr, self.lower.as_array(), self.upper.as_array())


@dataclass(frozen=True)
class InnerSearchConfig:
    max_iters: int = 60
    tol: float = 1e-6
    fd_step_frac: float = 1e-4


@dataclass(frozen=True)
class ContractScenario:
    """Everything the two-level search needs: per-user MI evaluators, prices,
    market constants, and the resource box."""

    evaluators: tuple
    prices: UnitPrices
    market: MarketConstants
    box: ResourceBox


@dataclass(frozen=True)
class ContractSolution:
    terms: ContractTerms
    bundles: tuple
    mi_values: tuple
    inp_utility: float
    msp_utility: float
    ir_satisfied: bool
    surface: tuple  # rows of (F_s, u_M, inp_utility, msp_utility, feasible, mi_total)


def _inner_objective(
    ev: MiEvaluator, prices: UnitPrices, per_qoe_fee: float, arr: np.ndarray
) -> float:
    bundle = ResourceBundle.from_array(arr)
    # payment-relevant MI: KPI factors clipped to [0, 1] so a link below its
    # floors earns nothing instead of a sign-flipped product
    return per_qoe_fee * ev.mi(bundle, clamp=True) - prices.cost(bundle)


def _optimize_single_user(
    ev: MiEvaluator,
    prices: UnitPrices,
    per_qoe_fee: float,
    box: ResourceBox,
    cfg: InnerSearchConfig,
) -> tuple[ResourceBundle, float, bool]:
    """Projected coordinate ascent with central-difference gradients.

    Run from two starts (box midpoint and near the upper corner, where the
    KPI factors are in bounds and gradients informative); keep the better.
    """
    lo, hi = box.lower.as_array(), box.upper.as_array()
    # keep rendering feasible: never below N_objects * floor
    render_min = len(ev.attention) * ev.render_floor
    lo = lo.copy()
    lo[3] = max(lo[3], render_min)
    starts = [np.maximum(0.5 * (lo + hi), lo), np.maximum(0.9 * hi + 0.1 * lo, lo)]
    best = None
    for start in starts:
        result = _ascend_from(ev, prices, per_qoe_fee, start, lo, hi, cfg)
        for _ in range(3):
            refined = _refine_rate_ceiling(ev, prices, per_qoe_fee, result[0], lo, hi)
            if refined is None:
                break
            result = _ascend_from(ev, prices, per_qoe_fee, refined, lo, hi, cfg)
        if best is None or result[1] > best[1]:
            best = result
    x, f, converged = best
    return ResourceBundle.from_array(x), f, converged


def _refine_rate_ceiling(ev, prices, per_qoe_fee, x, lo, hi):
    """Slide along the rate-ceiling kink, trading bandwidth against power.

    Once the rate factor saturates, the ceiling B * r(P) = rate_max couples
    the two downlink resources; coordinate moves cannot follow the diagonal,
    so scan power levels with the bandwidth pinned to the cheapest value
    that still meets the ceiling. Returns an improved point or None.
    """
    best_x, improved = x, False
    f = _inner_objective(ev, prices, per_qoe_fee, x)
    for pd in np.linspace(lo[0], hi[0], 25):
        probe = x.copy()
        probe[0] = pd
        probe[1] = 1e6
        per_hz = ev.kpis(ResourceBundle.from_array(probe))[0] / 1e6
        if per_hz <= 0.0:
            continue
        cand = x.copy()
        cand[0] = pd
        cand[1] = min(max(ev.bounds.rate_max / per_hz, lo[1]), hi[1])
        fc = _inner_objective(ev, prices, per_qoe_fee, cand)
        if fc > f:
            best_x, f, improved = cand, fc, True
    return best_x if improved else None


def _ascend_from(ev, prices, per_qoe_fee, x, lo, hi, cfg):
    span = hi - lo
    x = x.copy()
    f = _inner_objective(ev, prices, per_qoe_fee, x)
    converged = False
    for _ in range(cfg.max_iters):
        moved = 0.0
        for dim in range(4):
            if span[dim] == 0.0:
                continue
            h = cfg.fd_step_frac * span[dim]
            xp, xm = x.copy(), x.copy()
            xp[dim] = min(x[dim] + h, hi[dim])
            xm[dim] = max(x[dim] - h, lo[dim])
            if xp[dim] == xm[dim]:
                continue
            fp = _inner_objective(ev, prices, per_qoe_fee, xp)
            fm = _inner_objective(ev, prices, per_qoe_fee, xm)
            grad = (fp - fm) / (xp[dim] - xm[dim])
            if grad == 0.0:
                continue
            step = 0.25 * span[dim] * math.copysign(1.0, grad)
            # backtracking along the coordinate, projected into the box
            improved = False
            for _bt in range(30):
                cand = x.copy()
                cand[dim] = min(max(x[dim] + step, lo[dim]), hi[dim])
                if cand[dim] != x[dim]:
                    fc = _inner_objective(ev, prices, per_qoe_fee, cand)
                    if fc > f:
                        moved = max(moved, abs(cand[dim] - x[dim]) / max(span[dim], 1e-30))
                        x, f = cand, fc
                        improved = True
                        break
                step *= 0.5
            if not improved:
                continue
        if moved < cfg.tol:
            converged = True
            break
    return x, f, converged


def optimize_inner(
    per_qoe_fee: float,
    scenario: ContractScenario,
    cfg: InnerSearchConfig = InnerSearchConfig(),
) -> tuple[tuple, tuple]:
    """Per-user optimal bundles and MI values for a given per-QoE fee.

    Independent of the fixed fee: the fixed fee is an additive revenue term.
    """
    bundles = []
    mi_values = []
    for ev in scenario.evaluators:
        bundle, _, _ = _optimize_single_user(
            ev, scenario.prices, per_qoe_fee, scenario.box, cfg
        )
        bundles.append(bundle)
        mi_values.append(ev.mi(bundle, clamp=True))
    return tuple(bundles), tuple(mi_values)


@dataclass(frozen=True)
class GridConfig:
    fs_range: tuple = (0.0, 100.0)
    um_range: tuple = (0.0, 10.0)
    grid: int = 50


def optimize_contract(
    scenario: ContractScenario,
    grid_cfg: GridConfig = GridConfig(),
    inner_cfg: InnerSearchConfig = InnerSearchConfig(),
) -> ContractSolution:
    """Exhaustive (F_s, u_M) grid search with inner-result caching per u_M."""
    fs_grid = np.linspace(*grid_cfg.fs_range, grid_cfg.grid)
    um_grid = np.linspace(*grid_cfg.um_range, grid_cfg.grid)
    market = scenario.market
    surface = []
    best = None
    inner_cache = {}
    for um in um_grid:
        bundles, mi_values = optimize_inner(float(um), scenario, inner_cfg)
        inner_cache[float(um)] = (bundles, mi_values)
        cost = sum(scenario.prices.cost(b) for b in bundles)
        mi_total = float(np.sum(mi_values))
        for fs in fs_grid:
            terms = ContractTerms(fixed_fee=float(fs), per_qoe_fee=float(um))
            wealth = terms.fixed_fee + terms.per_qoe_fee * mi_total - cost
            u_inp = crra(wealth, market.rra)
            feasible = u_inp >= market.inp_utility_floor
            u_msp = msp_utility(terms, market, mi_values)
            surface.append((float(fs), float(um), u_inp, u_msp, feasible, mi_total))
            if feasible and (best is None or u_msp > best[1]):
                best = (terms, u_msp, u_inp, bundles, mi_values)
    if best is None:
        raise InfeasibleContractError("IR infeasible over grid")
    terms, u_msp, u_inp, bundles, mi_values = best
    return ContractSolution(
        terms=terms,
        bundles=bundles,
        mi_values=mi_values,
        inp_utility=u_inp,
        msp_utility=u_msp,
        ir_satisfied=True,
        surface=tuple(surface),
    )
