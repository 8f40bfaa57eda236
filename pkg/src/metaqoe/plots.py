"""Figure rendering for the report outputs.

All figures are written straight to files with the Agg backend so the CLI
works headless; each function mirrors one of the delimited outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "kpi_figure",
    "sir_histogram_figure",
    "allocation_figure",
    "prediction_error_figure",
    "contract_surface_figure",
]

_META = {"Software": "metaqoe"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)


def kpi_figure(path, rows) -> None:
    """Rate and BEP versus the swept variable, one line per user.

    ``rows`` are dicts with keys user, x, rate_analytic, bep_analytic and
    optional rate_mc / bep_mc.
    """
    users = sorted({r["user"] for r in rows})
    fig, (ax_rate, ax_bep) = plt.subplots(1, 2, figsize=(9, 3.6))
    for u in users:
        sub = [r for r in rows if r["user"] == u]
        x = [r["x"] for r in sub]
        ax_rate.plot(x, [r["rate_analytic"] / 1e6 for r in sub], label=f"user {u}")
        ax_bep.semilogy(x, [max(r["bep_analytic"], 1e-300) for r in sub])
        if sub and sub[0].get("rate_mc") is not None:
            ax_rate.plot(x, [r["rate_mc"] / 1e6 for r in sub], "x", ms=4)
            ax_bep.semilogy(x, [max(r["bep_mc"], 1e-300) for r in sub], "x", ms=4)
    ax_rate.set_xlabel("swept value")
    ax_rate.set_ylabel("downlink rate [Mbit/s]")
    ax_bep.set_xlabel("swept value")
    ax_bep.set_ylabel("uplink BEP")
    ax_rate.legend()
    _save(fig, path)


def sir_histogram_figure(path, edges, density, pdf_x=None, pdf_y=None) -> None:
    """Empirical SIR histogram with an optional analytic density overlay."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    centers = 0.5 * (np.asarray(edges[:-1]) + np.asarray(edges[1:]))
    ax.bar(centers, density, width=np.diff(edges), alpha=0.5, label="sampled")
    if pdf_x is not None:
        ax.plot(pdf_x, pdf_y, "r-", label="analytic")
    ax.set_xlabel("SIR")
    ax.set_ylabel("density")
    ax.legend()
    _save(fig, path)


def allocation_figure(path, mi_by_scheme) -> None:
    """Mean per-user MI per allocation scheme with min/max whiskers."""
    schemes = list(mi_by_scheme)
    means = [float(np.mean(mi_by_scheme[s])) for s in schemes]
    mins = [float(np.min(mi_by_scheme[s])) for s in schemes]
    maxs = [float(np.max(mi_by_scheme[s])) for s in schemes]
    fig, ax = plt.subplots(figsize=(5, 3.6))
    err = [np.subtract(means, mins), np.subtract(maxs, means)]
    ax.bar(schemes, means, yerr=err, capsize=4)
    ax.set_ylabel("Meta-Immersion per user")
    _save(fig, path)


def prediction_error_figure(path, overall, unobserved) -> None:
    """Grouped bars of {0,1,2+} level-error proportions."""
    labels = ["0", "1", "2+"]
    x = np.arange(3)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.bar(x - 0.17, overall, width=0.34, label="all entries")
    ax.bar(x + 0.17, unobserved, width=0.34, label="unobserved only")
    ax.set_xticks(x, labels)
    ax.set_xlabel("absolute level error")
    ax.set_ylabel("proportion")
    ax.legend()
    _save(fig, path)


def contract_surface_figure(path, surface, optimum=None) -> None:
    """Provider-utility heatmaps over the (fixed fee, per-QoE fee) grid.

    ``surface`` rows: (F_s, u_M, inp_utility, msp_utility, feasible, mi_total).
    Infeasible cells are masked in the right panel.
    """
    fs = sorted({row[0] for row in surface})
    um = sorted({row[1] for row in surface})
    idx = {(row[0], row[1]): row for row in surface}
    inp = np.full((len(um), len(fs)), np.nan)
    msp = np.full((len(um), len(fs)), np.nan)
    for j, f in enumerate(fs):
        for i, u in enumerate(um):
            row = idx[(f, u)]
            inp[i, j] = row[2] if np.isfinite(row[2]) else np.nan
            msp[i, j] = row[3] if row[4] else np.nan
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    extent = (min(fs), max(fs), min(um), max(um))
    for ax, z, title in ((ax1, inp, "provider utility"), (ax2, msp, "service utility (feasible)")):
        im = ax.imshow(z, origin="lower", aspect="auto", extent=extent)
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("fixed fee")
        ax.set_ylabel("per-QoE fee")
        ax.set_title(title)
    if optimum is not None:
        ax2.plot([optimum[0]], [optimum[1]], "r*", ms=12)
    _save(fig, path)
