import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaqoe import attention
from metaqoe.types import AttentionMatrix


def planted_matrix(rank, n_users=15, n_objects=25, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.gamma(2.0, 0.5, (n_users, rank))
    v = rng.gamma(2.0, 0.5, (n_objects, rank))
    return u @ v.T, rng


class TestFactorize:
    def test_planted_rank2_recovery(self):
        full, rng = planted_matrix(2)
        mask = rng.random(full.shape) < 0.8
        observed = AttentionMatrix(np.where(mask, full, 0.0), mask)
        model = attention.factorize(
            observed, s=2, reg_lambda=1e-6, max_sweeps=3000, tol=1e-13, seed=1
        )
        recon = model.user_factors @ model.object_factors.T
        rmse = float(np.sqrt(np.mean((recon[~mask] - full[~mask]) ** 2)))
        assert rmse < 1e-3

    def test_loss_nonincreasing(self):
        full, rng = planted_matrix(3, seed=4)
        mask = rng.random(full.shape) < 0.6
        observed = AttentionMatrix(np.where(mask, full, 0.0), mask)
        model = attention.factorize(observed, s=4, max_sweeps=40, seed=2)
        trace = np.array(model.loss_trace)
        assert np.all(np.diff(trace) <= 1e-9 * trace[:-1])

    def test_nonconvergence_flagged(self):
        full, rng = planted_matrix(4, seed=5)
        mask = rng.random(full.shape) < 0.7
        observed = AttentionMatrix(np.where(mask, full, 0.0), mask)
        model = attention.factorize(observed, s=4, max_sweeps=2, tol=1e-14, seed=0)
        assert not model.converged
        assert len(model.loss_trace) == 3

    def test_requires_observation(self):
        empty = AttentionMatrix(np.zeros((3, 3)), np.zeros((3, 3), dtype=bool))
        with pytest.raises(ValueError):
            attention.factorize(empty)

    def test_rejects_bad_rank(self):
        observed = AttentionMatrix(np.ones((2, 2)))
        with pytest.raises(ValueError):
            attention.factorize(observed, s=0)

    def test_deterministic_under_seed(self):
        full, rng = planted_matrix(2, seed=6)
        mask = rng.random(full.shape) < 0.7
        observed = AttentionMatrix(np.where(mask, full, 0.0), mask)
        m1 = attention.factorize(observed, s=3, max_sweeps=10, seed=5)
        m2 = attention.factorize(observed, s=3, max_sweeps=10, seed=5)
        assert np.array_equal(m1.user_factors, m2.user_factors)


class TestElementUpdates:
    def test_single_update_never_increases_loss(self):
        full, rng = planted_matrix(2, seed=7)
        mask = rng.random(full.shape) < 0.7
        observed = AttentionMatrix(np.where(mask, full, 0.0), mask)
        model = attention.factorize(observed, s=3, max_sweeps=1, seed=3)
        before = attention.loss(model, observed)
        attention.update_user_element(0, 0, model, observed)
        mid = attention.loss(model, observed)
        attention.update_object_element(0, 0, model, observed)
        after = attention.loss(model, observed)
        assert after <= mid <= before + 1e-12

    def test_cache_stays_consistent(self):
        full, rng = planted_matrix(2, seed=8)
        mask = rng.random(full.shape) < 0.7
        observed = AttentionMatrix(np.where(mask, full, 0.0), mask)
        model = attention.factorize(observed, s=3, max_sweeps=2, seed=3)
        attention.update_user_element(1, 2, model, observed)
        expected = model.user_factors @ model.object_factors.T
        # the cache is maintained on observed entries only
        assert np.allclose(model.predictions[mask], expected[mask])

    def test_zero_denominator_keeps_factor(self):
        observed = AttentionMatrix(
            np.array([[3.0, 0.0]]), np.array([[True, False]])
        )
        model = attention.factorize(observed, s=1, reg_lambda=0.0, max_sweeps=1, seed=0)
        # unobserved column: denominator is zero with no regularization
        before = model.object_factors[1, 0]
        assert attention.update_object_element(1, 0, model, observed) == before


class TestQuantization:
    def test_half_up_rounding(self):
        assert attention.quantize_level(2.5) == 3.0
        assert attention.quantize_level(1.49) == 1.0

    def test_clamped_to_level_range(self):
        assert attention.quantize_level(-3.0) == 1.0
        assert attention.quantize_level(9.0) == 5.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-100.0, max_value=100.0))
    def test_always_a_valid_level(self, x):
        level = float(attention.quantize_level(x))
        assert level in {1.0, 2.0, 3.0, 4.0, 5.0}

    def test_predict_levels_dense(self):
        observed = AttentionMatrix(
            np.array([[3.0, 4.0], [2.0, 5.0]])
        )
        model = attention.factorize(observed, s=2, max_sweeps=50, seed=1)
        pred = attention.predict_levels(model)
        assert pred.mask.all()
        assert pred.values.min() >= 1.0 and pred.values.max() <= 5.0
