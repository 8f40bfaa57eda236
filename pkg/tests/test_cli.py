import csv
import json

import numpy as np
import pytest

from metaqoe import cli, dataset


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run(argv):
    return cli.main(argv)


class TestKpiCommand:
    def test_single_point_and_user_ordering(self, tmp_path):
        out = tmp_path / "kpi"
        assert run(["kpi", "default", "--out", str(out), "--points", "1",
                    "--from", "100", "--to", "100"]) == 0
        rows = read_csv(out / "kpi.csv")
        assert rows[0] == ["user", "x", "rate_analytic", "rate_mc", "rate_mc_se",
                           "bep_analytic", "bep_mc", "bep_mc_se"]
        body = rows[1:]
        assert len(body) == 3
        rates = {int(r[0]): float(r[2]) for r in body}
        # higher-gain links rank user3 > user2 > user1 at equal power
        assert rates[3] > rates[2] > rates[1]
        assert body[0][3] == ""  # no Monte Carlo columns without --oracle
        assert (out / "kpi.png").exists()
        assert (out / "manifest.json").exists()

    def test_oracle_columns_within_three_sigma(self, tmp_path):
        out = tmp_path / "kpi"
        assert run(["kpi", "default", "--out", str(out), "--points", "2",
                    "--from", "50", "--to", "200", "--oracle",
                    "--samples", "50000"]) == 0
        for row in read_csv(out / "kpi.csv")[1:]:
            rate, rate_mc, rate_se = float(row[2]), float(row[3]), float(row[4])
            assert abs(rate - rate_mc) <= 4 * rate_se
        assert (out / "sir_histogram_user1.csv").exists()
        assert (out / "sir_histogram_user1.png").exists()

    def test_missing_scenario_is_config_error(self, tmp_path):
        assert run(["kpi", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2


class TestPredictCommand:
    @pytest.fixture()
    def small_corpus(self):
        cfg = dataset.CorpusConfig(
            n_users=12, n_objects=30, n_images=200, n_groups=8
        )
        return dataset.generate_corpus(cfg, seed=3)

    def test_fully_observed_reconstruction(self, tmp_path, small_corpus):
        matrix_path = tmp_path / "dense.csv"
        dataset.save_matrix(matrix_path, small_corpus.ground_truth)
        out = tmp_path / "pred"
        assert run(["predict", str(matrix_path), "--truth", str(matrix_path),
                    "--out", str(out), "--max-sweeps", "300", "--tol", "1e-6"]) == 0
        rows = read_csv(out / "error_histogram.csv")
        assert rows[0] == ["error_levels", "overall_proportion", "unobserved_proportion"]
        exact = float(rows[1][1])
        assert exact >= 0.95

    def test_sparse_round_trip_and_determinism(self, tmp_path, small_corpus):
        sparse = dataset.sparsify(small_corpus, seed=4)
        matrix_path = tmp_path / "sparse.csv"
        dataset.save_matrix(matrix_path, sparse)
        out1, out2 = tmp_path / "p1", tmp_path / "p2"
        for out in (out1, out2):
            assert run(["predict", str(matrix_path), "--out", str(out),
                        "--max-sweeps", "30"]) == 0
        assert (out1 / "predictions.csv").read_bytes() == (out2 / "predictions.csv").read_bytes()
        pred = dataset.load_matrix(out1 / "predictions.csv")
        assert pred.values.shape == sparse.values.shape
        assert pred.mask.all()

    def test_bad_matrix_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,9\n")
        assert run(["predict", str(bad), "--out", str(tmp_path / "o")]) == 2


class TestAllocationCommand:
    def test_budget_equal_floor_ties_all_schemes(self, tmp_path):
        out = tmp_path / "alloc"
        assert run(["experiment-allocation", "--out", str(out),
                    "--budget-per-object", "15", "--floor", "15"]) == 0
        rows = read_csv(out / "allocation.csv")
        assert rows[0] == ["user", "random", "uniform", "attention", "oracle"]
        body = [r for r in rows[1:] if r[0].isdigit()]
        assert len(body) == 30
        values = np.array([[float(c) for c in r[1:]] for r in body])
        # zero rendering headroom: every scheme collapses to the floor
        assert np.allclose(values, 0.0)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["mean_improvement_pct"] == 0.0

    def test_infeasible_budget_exit_code(self, tmp_path):
        assert run(["experiment-allocation", "--out", str(tmp_path / "o"),
                    "--budget-per-object", "10", "--floor", "15"]) == 3


class TestContractCommand:
    def test_surface_and_optimum(self, tmp_path):
        out = tmp_path / "ct"
        assert run(["contract", "default", "--out", str(out), "--grid", "6"]) == 0
        rows = read_csv(out / "surface.csv")
        assert rows[0] == ["F_s", "u_M", "inp_utility", "msp_utility", "feasible", "mi_total"]
        body = [(float(r[0]), float(r[1]), float(r[2]), float(r[3]), int(r[4]), float(r[5]))
                for r in rows[1:]]
        assert len(body) == 36
        optimum = json.loads((out / "optimum.json").read_text())
        feasible = [r for r in body if r[4] == 1]
        assert optimum["msp_utility"] == pytest.approx(max(r[3] for r in feasible))
        # MI depends only on the per-QoE fee, not the fixed fee
        by_um = {}
        for r in body:
            by_um.setdefault(r[1], set()).add(round(r[5], 9))
        assert all(len(v) == 1 for v in by_um.values())
        assert (out / "surface.png").exists()

    def test_infeasible_grid_exit_code(self, tmp_path):
        assert run(["contract", "default", "--out", str(tmp_path / "o"),
                    "--grid", "4", "--fs-range", "0,1", "--um-range", "0,1"]) == 3

    def test_bad_range_is_config_error(self, tmp_path):
        assert run(["contract", "default", "--out", str(tmp_path / "o"),
                    "--fs-range", "5,1"]) == 2


class TestManifest:
    def test_manifest_contents(self, tmp_path):
        out = tmp_path / "kpi"
        run(["kpi", "default", "--out", str(out), "--points", "1"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "kpi"
        assert manifest["parameters"]["points"] == 1
        assert "numpy" in manifest["versions"]
        assert "kpi.csv" in manifest["outputs"]
