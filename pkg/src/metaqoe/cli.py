"""Command-line driver: KPI sweeps, attention prediction, allocation and
contract experiments.

Every command writes its delimited outputs plus rendered figures and a
run-manifest JSON into the --out directory. Exit codes: 0 success, 2 bad
configuration, 3 infeasible problem.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import matplotlib
import numpy as np
import scipy

from . import __version__, attention, dataset, experiment, mimo, oracle, plots, scenarios
from .allocation import InfeasibleError
from .contract import GridConfig, InfeasibleContractError, optimize_contract
from .types import ConfigError, MODULATIONS, Scenario, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_SWEEP_FIELDS = {
    "power_down": "tx_power_down",
    "power_up": "tx_power_up",
    "bandwidth": "bandwidth_hz",
}


def _load_scenario_arg(arg: str) -> Scenario:
    if arg == "default":
        return scenarios.default_scenario()
    return load_scenario(arg)


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace, outputs) -> None:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    manifest = {
        "command": command,
        "parameters": params,
        "outputs": sorted(str(p.name) for p in outputs),
        "versions": {
            "metaqoe": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def cmd_kpi(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    out = _out_dir(args)
    field = _SWEEP_FIELDS[args.sweep]
    xs = np.linspace(args.sweep_from, args.sweep_to, args.points)
    mod = MODULATIONS[args.modulation]
    rows = []
    outputs = []
    for k, link in enumerate(scenario.users, start=1):
        z = mimo.zeta(link.antennas_cbs, link.antennas_rs)
        for x in xs:
            swept = dataclasses.replace(link, **{field: float(x)})
            row = {
                "user": k,
                "x": float(x),
                "rate_analytic": mimo.downlink_rate(swept, z),
                "bep_analytic": mimo.uplink_bep(swept, z, mod),
                "rate_mc": None,
                "rate_mc_se": None,
                "bep_mc": None,
                "bep_mc_se": None,
            }
            if args.oracle:
                cfg = oracle.OracleConfig(samples=args.samples, seed=args.seed + k)
                row["rate_mc"], row["rate_mc_se"] = oracle.empirical_rate(swept, cfg, z)
                row["bep_mc"], row["bep_mc_se"] = oracle.empirical_bep(swept, cfg, mod, z)
            rows.append(row)
        if args.oracle:
            cfg = oracle.OracleConfig(samples=args.samples, seed=args.seed + k)
            gamma = oracle.sample_sir(link, cfg, "down", z)
            hist_path = out / f"sir_histogram_user{k}.csv"
            oracle.write_histogram_csv(hist_path, gamma, cfg.histogram_bins)
            outputs.append(hist_path)
            fig_path = out / f"sir_histogram_user{k}.png"
            density, edges = np.histogram(gamma, bins=cfg.histogram_bins, density=True)
            pdf_x = np.linspace(edges[0] + 1e-9, edges[-1], 400)
            plots.sir_histogram_figure(
                fig_path, edges, density, pdf_x, mimo.sir_pdf(pdf_x, link, z)
            )
            outputs.append(fig_path)

    csv_path = out / "kpi.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "user",
                "x",
                "rate_analytic",
                "rate_mc",
                "rate_mc_se",
                "bep_analytic",
                "bep_mc",
                "bep_mc_se",
            ]
        )
        for r in rows:
            writer.writerow(
                [
                    r["user"],
                    _fmt(r["x"]),
                    _fmt(r["rate_analytic"]),
                    _fmt(r["rate_mc"]),
                    _fmt(r["rate_mc_se"]),
                    _fmt(r["bep_analytic"]),
                    _fmt(r["bep_mc"]),
                    _fmt(r["bep_mc_se"]),
                ]
            )
    fig_path = out / "kpi.png"
    plots.kpi_figure(fig_path, rows)
    outputs += [csv_path, fig_path]
    _write_manifest(out, "kpi", args, outputs)
    return EXIT_OK


def cmd_predict(args) -> int:
    out = _out_dir(args)
    truth = None
    if args.matrix == "default":
        corpus = dataset.generate_corpus(seed=args.seed)
        matrix = dataset.sparsify(corpus, seed=args.seed + 1)
        truth = corpus.ground_truth
    else:
        matrix = dataset.load_matrix(args.matrix)
    if args.truth is not None:
        truth = dataset.load_matrix(args.truth)
    model = attention.factorize(
        matrix,
        s=args.s,
        reg_lambda=args.reg_lambda,
        max_sweeps=args.max_sweeps,
        tol=args.tol,
        seed=args.seed,
    )
    pred = attention.predict_levels(model)
    pred_path = out / "predictions.csv"
    dataset.save_matrix(pred_path, pred)
    outputs = [pred_path]
    if truth is not None:
        err = np.abs(pred.values - truth.values)
        unobs = truth.mask & ~matrix.mask
        classes = [err == 0, err == 1, err >= 2]
        overall = [float(np.mean(c[truth.mask])) for c in classes]
        unobserved = [
            float(np.mean(c[unobs])) if unobs.any() else float("nan") for c in classes
        ]
        hist_path = out / "error_histogram.csv"
        with open(hist_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["error_levels", "overall_proportion", "unobserved_proportion"])
            for label, o, u in zip(("0", "1", "2+"), overall, unobserved):
                writer.writerow([label, _fmt(o), _fmt(u)])
        fig_path = out / "error_histogram.png"
        plots.prediction_error_figure(fig_path, overall, unobserved)
        outputs += [hist_path, fig_path]
        print(f"unobserved exact-match proportion: {unobserved[0]:.4f}")
    if not model.converged:
        print("warning: factorization hit max sweeps before the loss tolerance", file=sys.stderr)
    _write_manifest(out, "predict", args, outputs)
    return EXIT_OK


def cmd_experiment_allocation(args) -> int:
    out = _out_dir(args)
    cfg = experiment.ExperimentConfig(
        budget_per_object=args.budget_per_object,
        floor=args.floor,
        seed=args.seed,
    )
    result = experiment.run_allocation_experiment(cfg)
    schemes = experiment.SCHEMES if args.scheme == "all" else (args.scheme,)
    csv_path = out / "allocation.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", *schemes])
        n_users = result.mi["uniform"].size
        for u in range(n_users):
            writer.writerow([u, *(_fmt(result.mi[s][u]) for s in schemes)])
        if args.scheme == "all":
            for key, value in result.summary().items():
                writer.writerow([key, _fmt(value), *[""] * (len(schemes) - 1)])
    outputs = [csv_path]
    if args.scheme == "all":
        summary_path = out / "summary.json"
        with open(summary_path, "w") as fh:
            json.dump(result.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        fig_path = out / "allocation.png"
        plots.allocation_figure(fig_path, {s: result.mi[s] for s in schemes})
        outputs += [summary_path, fig_path]
        print(
            "attention vs uniform improvement: "
            f"mean {result.summary()['mean_improvement_pct']:.2f}%"
        )
    _write_manifest(out, "experiment-allocation", args, outputs)
    return EXIT_OK


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.replace(":", ",").split(",")
    if len(parts) != 2:
        raise ConfigError(f"range must be 'low,high': {text!r}")
    lo, hi = (float(p) for p in parts)
    if not hi > lo:
        raise ConfigError(f"range upper bound must exceed lower: {text!r}")
    return lo, hi


def cmd_contract(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    out = _out_dir(args)
    cs = scenarios.build_contract_scenario(
        scenario, n_objects=args.objects, seed=args.seed
    )
    grid_cfg = GridConfig(
        fs_range=_parse_range(args.fs_range),
        um_range=_parse_range(args.um_range),
        grid=args.grid,
    )
    solution = optimize_contract(cs, grid_cfg)
    surface_path = out / "surface.csv"
    with open(surface_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["F_s", "u_M", "inp_utility", "msp_utility", "feasible", "mi_total"])
        for fs, um, u_inp, u_msp, feasible, mi_total in solution.surface:
            writer.writerow(
                [_fmt(fs), _fmt(um), _fmt(u_inp), _fmt(u_msp), int(feasible), _fmt(mi_total)]
            )
    optimum_path = out / "optimum.json"
    with open(optimum_path, "w") as fh:
        json.dump(
            {
                "fixed_fee": solution.terms.fixed_fee,
                "per_qoe_fee": solution.terms.per_qoe_fee,
                "inp_utility": solution.inp_utility,
                "msp_utility": solution.msp_utility,
                "ir_satisfied": solution.ir_satisfied,
                "mi_values": list(solution.mi_values),
                "bundles": [dataclasses.asdict(b) for b in solution.bundles],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    fig_path = out / "surface.png"
    plots.contract_surface_figure(
        fig_path, solution.surface, (solution.terms.fixed_fee, solution.terms.per_qoe_fee)
    )
    _write_manifest(out, "contract", args, [surface_path, optimum_path, fig_path])
    print(
        f"optimal contract: F_s={solution.terms.fixed_fee:g} "
        f"u_M={solution.terms.per_qoe_fee:g} msp_utility={solution.msp_utility:g}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaqoe",
        description="Attention-aware QoE experiments for wireless immersive services",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kpi", help="closed-form KPI sweep with optional Monte Carlo check")
    p.add_argument("scenario", help="scenario JSON path or 'default'")
    p.add_argument("--out", required=True)
    p.add_argument("--sweep", choices=sorted(_SWEEP_FIELDS), default="power_down")
    p.add_argument("--from", dest="sweep_from", type=float, default=10.0)
    p.add_argument("--to", dest="sweep_to", type=float, default=1000.0)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--modulation", choices=sorted(MODULATIONS), default="DPSK")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kpi)

    p = sub.add_parser("predict", help="attention prediction from a sparse matrix")
    p.add_argument("matrix", help="matrix CSV path or 'default' for the synthetic corpus")
    p.add_argument("--truth", default=None, help="ground-truth matrix CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--s", type=int, default=16)
    p.add_argument("--lambda", dest="reg_lambda", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-sweeps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser(
        "experiment-allocation", help="per-user MI under the four allocation schemes"
    )
    p.add_argument("--out", required=True)
    p.add_argument(
        "--scheme", choices=("all",) + experiment.SCHEMES, default="all"
    )
    p.add_argument("--budget-per-object", type=float, default=20.0)
    p.add_argument("--floor", type=float, default=15.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_experiment_allocation)

    p = sub.add_parser("contract", help="two-level contract grid search")
    p.add_argument("scenario", help="scenario JSON path or 'default'")
    p.add_argument("--out", required=True)
    p.add_argument("--fs-range", default="0,3e6")
    p.add_argument("--um-range", default="0,3e4")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--objects", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_contract)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, InfeasibleContractError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
