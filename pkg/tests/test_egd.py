import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixopt import (
    DegenerateMatrixError,
    DimensionError,
    MixoptError,
    egd_step,
    ema_interaction,
    normalize_interaction,
    unrolled_egd,
    validate_proportions,
)


def random_instance(rng, num_groups=None, rows=None):
    m = num_groups or int(rng.integers(2, 8))
    k = rows or int(rng.integers(1, 5))
    p = rng.dirichlet(np.ones(m))
    a = rng.normal(size=(k, m))
    b = rng.normal(size=k)
    eta = float(rng.uniform(0.05, 1.0))
    return p, a, b, eta


class TestEgdStep:
    def test_frozen_half_split(self):
        # One row [1, 0], unit scale, step ln 2 doubles the first weight
        # before renormalizing: [0.5, 0.5] -> [2/3, 1/3].
        out = egd_step([0.5, 0.5], [[1.0, 0.0]], scale=[1.0],
                       step_size=math.log(2.0))
        assert np.allclose(out, [2 / 3, 1 / 3], rtol=0, atol=1e-15)

    def test_matches_literal_form(self):
        # Log-space softmax must agree with the direct multiplicative form
        # p * exp(eta * b @ A) / Z wherever the latter does not overflow.
        rng = np.random.default_rng(0)
        for _ in range(200):
            p, a, b, eta = random_instance(rng)
            w = p * np.exp(eta * (b @ a))
            assert np.allclose(egd_step(p, a, scale=b, step_size=eta),
                               w / w.sum(), rtol=0, atol=1e-12)

    def test_simplex_output(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p, a, b, eta = random_instance(rng)
            out = egd_step(p, a, scale=b, step_size=eta)
            validate_proportions(out)

    def test_default_scale_is_ones(self):
        rng = np.random.default_rng(2)
        p, a, b, eta = random_instance(rng)
        assert np.array_equal(egd_step(p, a, step_size=eta),
                              egd_step(p, a, scale=np.ones(a.shape[0]),
                                       step_size=eta))

    def test_zero_weight_stays_zero(self):
        out = egd_step([0.0, 0.4, 0.6], [[5.0, 1.0, -1.0]], step_size=0.3)
        assert out[0] == 0.0
        validate_proportions(out)

    def test_row_vector_interaction(self):
        out1 = egd_step([0.3, 0.7], [1.0, -1.0], step_size=0.2)
        out2 = egd_step([0.3, 0.7], [[1.0, -1.0]], step_size=0.2)
        assert np.array_equal(out1, out2)

    def test_invalid_inputs(self):
        with pytest.raises(MixoptError):
            egd_step([0.5, 0.5], [[1.0, 0.0]], step_size=0.0)
        with pytest.raises(MixoptError):
            egd_step([0.5, 0.5], [[1.0, 0.0]], step_size=-0.1)
        with pytest.raises(DimensionError):
            egd_step([0.5, 0.5], [[1.0, 0.0, 0.0]])
        with pytest.raises(DimensionError):
            egd_step([0.5, 0.5], [[1.0, 0.0]], scale=[1.0, 2.0])
        with pytest.raises(MixoptError):
            egd_step([0.5, 0.5], [[np.nan, 0.0]])

    def test_shift_invariance(self):
        # Adding a constant to every entry shifts all logits equally.
        rng = np.random.default_rng(3)
        p, a, b, eta = random_instance(rng)
        out1 = egd_step(p, a, scale=b, step_size=eta)
        out2 = egd_step(p, a + 7.5 / b.sum() if b.sum() else a, scale=b,
                        step_size=eta)
        if b.sum():
            assert np.allclose(out1, out2, rtol=0, atol=1e-12)

    @settings(max_examples=60)
    @given(st.integers(0, 10_000))
    def test_property_simplex_and_positivity(self, seed):
        rng = np.random.default_rng(seed)
        p, a, b, eta = random_instance(rng)
        out = egd_step(p, a, scale=b, step_size=eta)
        validate_proportions(out)
        assert np.all(out[p > 0] > 0)


class TestUnrolledEgd:
    def test_matches_iterated_steps(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            m = int(rng.integers(2, 6))
            t = int(rng.integers(1, 15))
            p0 = rng.dirichlet(np.ones(m))
            mats = [rng.normal(size=(3, m)) for _ in range(t)]
            scales = [rng.normal(size=3) for _ in range(t)]
            eta = float(rng.uniform(0.05, 0.6))
            p = p0
            for a, b in zip(mats, scales):
                p = egd_step(p, a, scale=b, step_size=eta)
            closed = unrolled_egd(p0, mats, scales=scales, step_size=eta)
            assert np.allclose(p, closed, rtol=0, atol=1e-10)

    def test_single_round_equals_step(self):
        rng = np.random.default_rng(5)
        p, a, b, eta = random_instance(rng)
        assert np.allclose(unrolled_egd(p, [a], scales=[b], step_size=eta),
                           egd_step(p, a, scale=b, step_size=eta),
                           rtol=0, atol=1e-14)

    def test_empty_sequence_is_identity(self):
        out = unrolled_egd([0.3, 0.7], [], step_size=0.2)
        assert np.allclose(out, [0.3, 0.7], rtol=0, atol=1e-15)


class TestNormalizeInteraction:
    def test_unit_frobenius_norm(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(3, 3))
        out = normalize_interaction(a)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12

    def test_direction_preserved(self):
        a = np.array([[3.0, 0.0], [0.0, 4.0]])
        out = normalize_interaction(a)
        assert np.allclose(out, a / 5.0, rtol=0, atol=1e-15)

    def test_positive_scale_invariance(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(2, 4))
        assert np.allclose(normalize_interaction(a),
                           normalize_interaction(250.0 * a),
                           rtol=0, atol=1e-12)

    def test_zero_matrix_rejected(self):
        with pytest.raises(DegenerateMatrixError):
            normalize_interaction(np.zeros((2, 2)))


class TestEmaInteraction:
    def test_first_round_passthrough(self):
        cur = np.array([[1.0, 2.0]])
        out = ema_interaction(None, cur, 0.3)
        assert np.array_equal(out, cur)
        out[0, 0] = 9.0
        assert cur[0, 0] == 1.0

    def test_convex_blend(self):
        prev = np.array([[2.0, 0.0]])
        cur = np.array([[0.0, 2.0]])
        out = ema_interaction(prev, cur, 0.25)
        assert np.allclose(out, [[0.5, 1.5]], rtol=0, atol=1e-15)

    def test_weight_zero_is_current(self):
        prev = np.ones((2, 2))
        cur = np.full((2, 2), 3.0)
        assert np.array_equal(ema_interaction(prev, cur, 0.0), cur)

    def test_weight_one_rejected(self):
        with pytest.raises(MixoptError):
            ema_interaction(np.ones((2, 2)), np.ones((2, 2)), 1.0)
