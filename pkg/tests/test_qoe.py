import math

import numpy as np
import pytest

from metaqoe import qoe, scenarios
from metaqoe.types import KpiBounds, ResourceBundle


@pytest.fixture(scope="module")
def evaluator():
    return scenarios.build_evaluators(scenarios.default_scenario())[0]


BOUNDS = KpiBounds(rate_min=10e6, rate_max=42e6)
IN_BOUNDS_BUNDLE = ResourceBundle(
    power_down=400.0, bandwidth=8e6, power_up=7.0, render_total=260.0
)


class TestNormalize:
    def test_affine(self):
        assert qoe.normalize(26e6, 10e6, 42e6) == pytest.approx(0.5)

    def test_not_clamped(self):
        assert qoe.normalize(-6e6, 10e6, 42e6) == pytest.approx(-0.5)
        assert qoe.normalize(58e6, 10e6, 42e6) == pytest.approx(1.5)

    def test_rejects_degenerate_interval(self):
        with pytest.raises(ValueError):
            qoe.normalize(1.0, 2.0, 2.0)


class TestMetaImmersion:
    def test_hand_value(self):
        # T_rate=0.5, T_bep ~= (1e-2 - 1e-4)/(1e-2 - 1e-8), render = 2*ln(2)
        mi = qoe.meta_immersion(
            26e6, 1e-4, BOUNDS, (2.0,), (30.0,), 15.0
        )
        t_bep = (1e-2 - 1e-4) / (1e-2 - 1e-8)
        assert mi == pytest.approx(0.5 * t_bep * 2.0 * math.log(2.0))

    def test_out_of_bounds_flags(self):
        _, flags = qoe.meta_immersion_report(
            5e6, 0.2, BOUNDS, (1.0,), (15.0,), 15.0
        )
        assert set(flags) == {"rate out of bounds", "bep out of bounds"}

    def test_clamp_zeroes_bad_links(self):
        mi = qoe.meta_immersion(
            5e6, 0.2, BOUNDS, (2.0,), (30.0,), 15.0, clamp=True
        )
        assert mi == 0.0

    def test_clamp_keeps_flags(self):
        _, flags = qoe.meta_immersion_report(
            5e6, 1e-4, BOUNDS, (1.0,), (15.0,), 15.0, clamp=True
        )
        assert flags == ("rate out of bounds",)


class TestLatencyHook:
    def test_zero_beyond_budget(self):
        assert qoe.latency_hook(3.0, latency=11.0, latency_max=10.0) == 0.0

    def test_linear_headroom(self):
        assert qoe.latency_hook(4.0, latency=2.5, latency_max=10.0) == pytest.approx(3.0)


class TestEvaluator:
    def test_mi_increases_with_rendering(self, evaluator):
        lo = evaluator.mi(IN_BOUNDS_BUNDLE)
        hi = evaluator.mi(
            ResourceBundle(400.0, 8e6, 7.0, 320.0)
        )
        assert hi > lo

    def test_mi_increases_with_power(self, evaluator):
        lo = evaluator.mi(ResourceBundle(200.0, 8e6, 7.0, 260.0))
        hi = evaluator.mi(ResourceBundle(700.0, 8e6, 7.0, 260.0))
        assert hi > lo

    def test_allocation_respects_floor(self, evaluator):
        alloc = evaluator.allocate(260.0)
        assert np.all(alloc >= evaluator.render_floor - 1e-9)
        assert alloc.sum() == pytest.approx(260.0)

    def test_clamped_at_most_unclamped_magnitude(self, evaluator):
        bundle = ResourceBundle(15.0, 2e6, 0.5, 260.0)
        assert evaluator.mi(bundle, clamp=True) == 0.0


class TestConcavityProbe:
    def test_concave_in_rendering(self, evaluator):
        report = qoe.concavity_probe(
            "render_total", evaluator, IN_BOUNDS_BUNDLE, np.linspace(200, 350, 9)
        )
        assert report.max_normalized <= 1e-6

    def test_linear_in_bandwidth(self, evaluator):
        report = qoe.concavity_probe(
            "bandwidth", evaluator, IN_BOUNDS_BUNDLE, np.linspace(3e6, 10e6, 9)
        )
        assert abs(report.max_normalized) <= 1e-6
        second = np.array(report.second_derivatives)
        assert np.max(np.abs(second)) <= 1e-6 * report.scale

    def test_unknown_resource(self, evaluator):
        with pytest.raises(ValueError):
            qoe.concavity_probe("latency", evaluator, IN_BOUNDS_BUNDLE, np.linspace(0, 1, 9))

    def test_grid_validation(self, evaluator):
        with pytest.raises(ValueError):
            qoe.concavity_probe(
                "bandwidth", evaluator, IN_BOUNDS_BUNDLE, np.linspace(3e6, 10e6, 3)
            )
        with pytest.raises(ValueError):
            qoe.concavity_probe(
                "bandwidth", evaluator, IN_BOUNDS_BUNDLE, [3e6, 4e6, 6e6, 9e6, 10e6]
            )
