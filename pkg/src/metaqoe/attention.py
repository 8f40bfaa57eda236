"""Attention prediction by weighted matrix factorization.

Training runs element-wise alternating least squares: each factor
coordinate is set to its closed-form minimizer while the cached dense
prediction matrix is kept consistent, giving O(N_U * N_O * S) per sweep.
Weights are 1 on observed entries and 0 elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .types import AttentionMatrix

__all__ = [
    "FactorModel",
    "loss",
    "update_user_element",
    "update_object_element",
    "factorize",
    "predict_levels",
    "quantize_level",
]

LEVEL_MIN = 1
LEVEL_MAX = 5


@dataclass
class FactorModel:
    """Latent factors plus the cached dense prediction matrix."""

    user_factors: np.ndarray
    object_factors: np.ndarray
    reg_lambda: float
    weights: np.ndarray
    predictions: np.ndarray = field(default=None, repr=False)
    converged: bool = True
    loss_trace: tuple = ()

    def __post_init__(self):
        if self.predictions is None:
            self.predictions = self.user_factors @ self.object_factors.T

    @property
    def n_features(self) -> int:
        return self.user_factors.shape[1]

    def refresh_cache(self) -> None:
        self.predictions = self.user_factors @ self.object_factors.T


def loss(model: FactorModel, observed: AttentionMatrix) -> float:
    """Weighted squared reconstruction error plus L2 regularization."""
    if observed.values.shape != model.weights.shape:
        raise ValueError("dimension mismatch between model and observations")
    pred = model.user_factors @ model.object_factors.T
    resid = observed.observed_values() - pred
    fit = float(np.sum(model.weights * resid**2))
    reg = model.reg_lambda * (
        float(np.sum(model.user_factors**2)) + float(np.sum(model.object_factors**2))
    )
    return fit + reg


def update_user_element(
    u: int, f: int, model: FactorModel, observed: AttentionMatrix
) -> float:
    """Closed-form coordinate minimizer for one user-factor element.

    Updates the factor and the prediction cache in place and returns the new
    value. A zero denominator (lambda=0 with an all-zero column) leaves the
    factor unchanged.
    """
    w = model.weights[u]
    idx = np.nonzero(w)[0]
    n_f = model.object_factors[idx, f]
    w_obs = w[idx]
    a_obs = observed.values[u, idx]
    old = model.user_factors[u, f]
    ahat_f = model.predictions[u, idx] - old * n_f
    denom = float(np.sum(w_obs * n_f**2)) + model.reg_lambda
    if denom == 0.0:
        return old
    new = float(np.sum((a_obs - ahat_f) * w_obs * n_f)) / denom
    model.user_factors[u, f] = new
    model.predictions[u, idx] = ahat_f + new * n_f
    return new


def update_object_element(
    i: int, f: int, model: FactorModel, observed: AttentionMatrix
) -> float:
    """Closed-form coordinate minimizer for one object-factor element."""
    w = model.weights[:, i]
    idx = np.nonzero(w)[0]
    m_f = model.user_factors[idx, f]
    w_obs = w[idx]
    a_obs = observed.values[idx, i]
    old = model.object_factors[i, f]
    ahat_f = model.predictions[idx, i] - old * m_f
    denom = float(np.sum(w_obs * m_f**2)) + model.reg_lambda
    if denom == 0.0:
        return old
    new = float(np.sum((a_obs - ahat_f) * w_obs * m_f)) / denom
    model.object_factors[i, f] = new
    model.predictions[idx, i] = ahat_f + new * m_f
    return new


def factorize(
    observed: AttentionMatrix,
    s: int = 16,
    reg_lambda: float = 0.1,
    max_sweeps: int = 200,
    tol: float = 1e-4,
    seed: int = 0,
) -> FactorModel:
    """Fit latent factors by full user-then-object coordinate sweeps.

    Stops when the relative loss decrease per sweep falls below ``tol``.
    Non-convergence is reported via ``model.converged`` and the loss trace.
    """
    if s < 1:
        raise ValueError("latent dimension must be >=1")
    if not observed.mask.any():
        raise ValueError("at least one observed entry is required")
    n_users, n_objects = observed.values.shape
    weights = observed.mask.astype(float)
    rng = np.random.default_rng(seed)
    mean_level = float(observed.values[observed.mask].mean())
    init_hi = math.sqrt(max(mean_level, 1e-12) / s)
    model = FactorModel(
        user_factors=rng.uniform(0.0, init_hi, size=(n_users, s)),
        object_factors=rng.uniform(0.0, init_hi, size=(n_objects, s)),
        reg_lambda=reg_lambda,
        weights=weights,
    )
    trace = [loss(model, observed)]
    converged = False
    for _ in range(max_sweeps):
        for u in range(n_users):
            for f in range(s):
                update_user_element(u, f, model, observed)
        for i in range(n_objects):
            for f in range(s):
                update_object_element(i, f, model, observed)
        trace.append(loss(model, observed))
        prev, cur = trace[-2], trace[-1]
        if prev <= 0 or abs(prev - cur) / max(prev, 1e-30) < tol:
            converged = True
            break
    model.converged = converged
    model.loss_trace = tuple(trace)
    return model


def quantize_level(raw) -> np.ndarray:
    """Round half up to the nearest integer level, clamped to [1, 5]."""
    levels = np.floor(np.asarray(raw, dtype=float) + 0.5)
    return np.clip(levels, LEVEL_MIN, LEVEL_MAX)


def predict_levels(model: FactorModel) -> AttentionMatrix:
    """Dense quantized prediction matrix from a trained model."""
    raw = model.user_factors @ model.object_factors.T
    return AttentionMatrix(quantize_level(raw))
