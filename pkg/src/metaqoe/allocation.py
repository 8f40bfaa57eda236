"""Attention-weighted water-filling of rendering capacity with a floor.

The primary solver is the iterative pin-and-resolve procedure: start from
the unconstrained proportional split, pin the worst object to the floor,
remove its mass from the budget, and re-solve until every unpinned object
clears the floor. A bisection solver on the water-level equation is
available as a cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InfeasibleError",
    "AllocationProblem",
    "water_fill",
    "water_fill_bisection",
    "kkt_check",
    "KktReport",
    "objective",
]


class InfeasibleError(ValueError):
    """Total budget is too small to give every object the floor."""


@dataclass(frozen=True)
class AllocationProblem:
    attention: tuple
    total: float
    floor: float

    def __post_init__(self):
        k = np.asarray(self.attention, dtype=float)
        if k.size == 0:
            raise ValueError("attention vector must be non-empty")
        if np.any(k <= 0):
            raise ValueError("every attention weight must be >0")
        if self.floor <= 0 or self.total <= 0:
            raise ValueError("total and floor must be >0")
        deficit = k.size * self.floor - self.total
        if deficit > 1e-9 * max(1.0, self.total):
            raise InfeasibleError(
                f"budget short by {deficit:.6g}: total {self.total} < "
                f"{k.size} objects x floor {self.floor}"
            )

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.attention, dtype=float)


def water_fill(problem: AllocationProblem) -> np.ndarray:
    """Optimal allocation max(K_n / mu*, floor) by pin-and-resolve.

    Objects whose proportional share falls strictly below the floor are
    pinned there one at a time (ties at the floor stay unpinned); the loop
    runs at most N iterations.
    """
    k = problem.weights
    n = k.size
    floor = problem.floor
    alloc = np.empty(n)
    pinned = np.zeros(n, dtype=bool)
    for _ in range(n):
        free = ~pinned
        n_pinned = int(pinned.sum())
        budget = problem.total - n_pinned * floor
        mu = k[free].sum() / budget
        share = k / mu
        below = free & (share < floor)
        if not below.any():
            alloc[free] = share[free]
            alloc[pinned] = floor
            return alloc
        # pin the worst remaining object
        candidates = np.nonzero(below)[0]
        worst = candidates[np.argmin(share[candidates])]
        pinned[worst] = True
    alloc[:] = floor
    return alloc


def water_fill_bisection(
    problem: AllocationProblem, tol: float = 1e-12, max_iter: int = 200
) -> np.ndarray:
    """Cross-check oracle: bisection on mu in sum(max(K/mu, floor)) = total."""
    k = problem.weights
    floor = problem.floor
    total = problem.total

    def spent(mu):
        return np.maximum(k / mu, floor).sum()

    lo = k.min() / (total + 1.0)  # mu small -> spend too much
    hi = k.sum() / (k.size * floor)  # all at floor -> minimal spend
    hi = max(hi, lo * 2.0)
    # ensure bracketing: spent(lo) >= total >= spent(hi)
    while spent(lo) < total:
        lo /= 2.0
    while spent(hi) > total:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if spent(mid) > total:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    mu = 0.5 * (lo + hi)
    alloc = np.maximum(k / mu, floor)
    # distribute the tiny residual over unpinned objects to hit the budget
    free = alloc > floor
    if free.any():
        alloc[free] += (total - alloc.sum()) * k[free] / k[free].sum()
    return alloc


@dataclass(frozen=True)
class KktReport:
    stationarity: float
    primal_feasibility: float
    dual_feasibility: float
    complementary_slackness: float
    budget_gap: float
    violations: tuple

    @property
    def passed(self) -> bool:
        return not self.violations


def kkt_check(
    problem: AllocationProblem, allocation, tol: float = 1e-6
) -> KktReport:
    """Verify the optimality conditions of an allocation.

    Checks equal K_n/P_n ratios on the unpinned set, the floor and budget
    constraints, nonnegativity of the implied floor multipliers, and
    complementary slackness.
    """
    k = problem.weights
    p = np.asarray(allocation, dtype=float)
    if p.shape != k.shape:
        raise ValueError("allocation length must match attention length")
    floor = problem.floor
    scale = max(problem.total, 1.0)

    primal = max(float(np.max(floor - p)), float(p.sum() - problem.total)) / scale
    pinned = np.isclose(p, floor, rtol=0.0, atol=tol * scale)
    free = ~pinned
    ratios = k[free] / p[free] if free.any() else np.array([])
    mu = float(ratios.mean()) if ratios.size else float((k / p).max())
    stationarity = float(np.max(np.abs(ratios - mu))) / mu if ratios.size else 0.0
    # pinned objects need lambda_n = mu - K_n / floor >= 0
    dual = 0.0
    if pinned.any():
        lam = mu - k[pinned] / floor
        dual = max(0.0, float(-lam.min())) / mu
    slack = float(np.max(np.abs((p - floor) * np.where(pinned, 1.0, 0.0)))) / scale
    budget = abs(float(p.sum()) - problem.total) / scale

    violations = []
    if primal > tol:
        violations.append(f"primal feasibility violated by {primal:.3g}")
    if stationarity > tol:
        violations.append(f"stationarity violated by {stationarity:.3g}")
    if dual > tol:
        violations.append(f"dual feasibility violated by {dual:.3g}")
    if slack > tol:
        violations.append(f"complementary slackness violated by {slack:.3g}")
    if budget > tol:
        violations.append(f"budget equality violated by {budget:.3g}")
    return KktReport(
        stationarity=stationarity,
        primal_feasibility=primal,
        dual_feasibility=dual,
        complementary_slackness=slack,
        budget_gap=budget,
        violations=tuple(violations),
    )


def objective(attention, allocation, floor: float) -> float:
    """Attention-weighted log utility sum(K_n * ln(P_n / floor))."""
    k = np.asarray(attention, dtype=float)
    p = np.asarray(allocation, dtype=float)
    if np.any(p < floor * (1.0 - 1e-12)):
        raise ValueError("allocation entry below the floor")
    return float(np.sum(k * np.log(np.maximum(p, floor) / floor)))
