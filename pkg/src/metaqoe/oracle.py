"""Independent Monte Carlo ground truth for the link KPIs.

Samples the Gamma/Gamma ratio form of the SIR model (signal power
~ Gamma(M_C*M_U), interference ~ Gamma(M_C*N_Q) downlink or Gamma(M_U*N_Q)
uplink, scale ratio 1/Lambda) and estimates rate and BEP empirically.
A direct matrix-based eigen-sampler is kept as a secondary validator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from . import mimo
from .types import LinkParams, ModulationScheme

__all__ = [
    "OracleConfig",
    "sample_sir",
    "sample_sir_matrix",
    "empirical_rate",
    "empirical_bep",
    "write_histogram_csv",
]


@dataclass(frozen=True)
class OracleConfig:
    samples: int = 100_000
    seed: int = 7
    histogram_bins: int = 200

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >=1")
        if self.histogram_bins < 1:
            raise ValueError("histogram_bins must be >=1")


def _substreams(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_sir(
    params: LinkParams,
    cfg: OracleConfig,
    direction: str = "down",
    zeta_k: float | None = None,
) -> np.ndarray:
    """Draw SIR samples matching the analytic density.

    gamma = (X / Y) / Lambda with X ~ Gamma(a, 1), Y ~ Gamma(b, 1) where a is
    the signal shape and b the interference shape for the given direction.
    """
    a, b = mimo._shape_params(params, direction)
    if zeta_k is None:
        zeta_k = mimo.zeta(params.antennas_cbs, params.antennas_rs)
    lam = (
        mimo.lambda_down(params, zeta_k)
        if direction == "down"
        else mimo.lambda_up(params, zeta_k)
    )
    rng = _substreams(cfg.seed, 1)[0]
    x = rng.gamma(a, 1.0, size=cfg.samples)
    y = rng.gamma(b, 1.0, size=cfg.samples)
    return (x / y) / lam


def sample_sir_matrix(
    params: LinkParams, cfg: OracleConfig, zeta_k: float | None = None
) -> np.ndarray:
    """Secondary validator: downlink SIR from full channel-matrix draws.

    The array gain of each draw is the largest eigenvalue of H^H H scaled so
    its mean matches the zeta-based model; interference is a sum of
    M_C*N_Q unit-mean exponential path powers.
    """
    m_c, m_u = params.antennas_cbs, params.antennas_rs
    if zeta_k is None:
        zeta_k = mimo.zeta(m_c, m_u)
    rng = _substreams(cfg.seed, 2)[1]
    h = (
        rng.standard_normal((cfg.samples, m_u, m_c))
        + 1j * rng.standard_normal((cfg.samples, m_u, m_c))
    ) / math.sqrt(2.0)
    s = np.linalg.svd(h, compute_uv=False)
    lam_max = s[:, 0] ** 2
    # Gamma(a,1)-shaped signal surrogate scaled to mean a = M_C*M_U; the
    # eigen route keeps the same mean through zeta * M_C * M_U.
    signal = lam_max / zeta_k
    interference = rng.gamma(m_c * params.interference_paths, 1.0, size=cfg.samples)
    # 1 / Lambda = M_C * zeta * D^-alpha * P * mu / (P_intf * mu_intf)
    scale = (
        m_c
        * zeta_k
        * params.distance_m ** (-params.path_loss_exp)
        * params.tx_power_down
        * params.chan_coeff_data
    ) / (params.interference_power_down * params.chan_coeff_intf)
    return scale * signal / interference


def empirical_rate(
    params: LinkParams,
    cfg: OracleConfig,
    zeta_k: float | None = None,
) -> tuple[float, float]:
    """Sample mean and standard error of B * log2(1 + gamma)."""
    gamma = sample_sir(params, cfg, "down", zeta_k)
    vals = np.log2(1.0 + gamma) * params.bandwidth_hz
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(cfg.samples)) if cfg.samples > 1 else 0.0
    return mean, se


def empirical_bep(
    params: LinkParams,
    cfg: OracleConfig,
    mod: ModulationScheme,
    zeta_up: float | None = None,
) -> tuple[float, float]:
    """Sample mean and standard error of the conditional BEP over uplink SIR."""
    gamma = sample_sir(params, cfg, "up", zeta_up)
    vals = 0.5 * gammaincc(mod.tau2, mod.tau1 * gamma)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(cfg.samples)) if cfg.samples > 1 else 0.0
    return mean, se


def write_histogram_csv(path, gamma: np.ndarray, bins: int) -> None:
    """Emit a density histogram as gamma_bin_left,gamma_bin_right,density."""
    density, edges = np.histogram(gamma, bins=bins, density=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma_bin_left", "gamma_bin_right", "density"])
        for left, right, d in zip(edges[:-1], edges[1:], density):
            writer.writerow([repr(float(left)), repr(float(right)), repr(float(d))])
