import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gradcheck
from ippsm import numerics as nm


class TestGradients:
    def test_finite_difference_suite(self):
        results = gradcheck.run_suite()
        assert len(results) >= 20
        bad = [(label, err) for label, err in results if err > 1e-4]
        assert not bad, f"gradient mismatches: {bad}"

    def test_fused_softmax_ce_gradient_is_p_minus_y(self):
        rng = np.random.default_rng(4)
        logits = nm.Tensor(rng.standard_normal((5, 7)), dtype=np.float64)
        targets = rng.integers(7, size=5)
        p = nm.softmax_rows(logits)
        loss = nm.smoothed_cross_entropy(p, targets, 0.0)
        nm.backward(loss)
        y = np.zeros((5, 7))
        y[np.arange(5), targets] = 1.0
        want = (p.data - y) / 5
        assert np.allclose(logits.grad, want, atol=1e-12)


class TestFrozenValues:
    def test_conv_identity_kernel(self):
        x = nm.Tensor(np.array([[[1.0], [2.0], [3.0]]]))
        k = nm.Tensor(np.array([[[1.0]]]))
        y = nm.conv1d_same(x, k)
        assert np.allclose(y.data.ravel(), [1.0, 2.0, 3.0])

    def test_conv_box_kernel_zero_padding(self):
        x = nm.Tensor(np.array([[[1.0], [2.0], [3.0]]]))
        k = nm.Tensor(np.ones((3, 1, 1)))
        y = nm.conv1d_same(x, k)
        assert np.allclose(y.data.ravel(), [3.0, 6.0, 5.0])

    def test_mmd_two_points_closed_form(self):
        a = nm.Tensor(np.array([[0.0]]), dtype=np.float64)
        b = nm.Tensor(np.array([[1.0]]), dtype=np.float64)
        v = nm.mmd_sq(a, b, bandwidth=1.0)
        assert float(v.data) == pytest.approx(2.0 - 2.0 * math.exp(-0.5), rel=1e-12)

    def test_adam_first_step_magnitude(self):
        params = {"p": np.array([1.0], dtype=np.float32)}
        grads = {"p": np.array([1.0], dtype=np.float32)}
        state = nm.OptimizerState(learning_rate=1e-4)
        nm.adam_step(params, grads, state)
        delta = float(params["p"][0]) - 1.0
        assert delta == pytest.approx(-1e-4, rel=1e-2)

    def test_median_heuristic_bandwidth(self):
        # joint {0,3,0,3}: off-diagonal distances [3,0,3,3,0,3], median 3
        a = np.array([[0.0], [3.0]])
        bw = nm.median_heuristic_bandwidth(a, a)
        assert bw == pytest.approx(3.0)
        # degenerate single pair at distance 0 falls back to 1
        z = np.array([[2.0]])
        assert nm.median_heuristic_bandwidth(z, z) == 1.0


class TestProperties:
    @given(
        st.integers(0, 2**31 - 1),
        st.sampled_from([1.0, 10.0, 1e3]),
    )
    @settings(max_examples=30, deadline=None)
    def test_softmax_rows_sum_to_one(self, seed, scale):
        rng = np.random.default_rng(seed)
        z = nm.Tensor(rng.standard_normal((4, 6)) * scale, dtype=np.float64)
        p = nm.softmax_rows(z)
        assert np.all(p.data >= 0)
        assert np.allclose(p.data.sum(axis=1), 1.0, atol=1e-6)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_mmd_nonnegative_and_zero_on_self(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((5, 3))
        b = rng.standard_normal((4, 3))
        v = nm.mmd_sq(nm.Tensor(a, dtype=np.float64), nm.Tensor(b, dtype=np.float64), bandwidth=1.0)
        assert float(v.data) >= -1e-12
        same = nm.mmd_sq(nm.Tensor(a, dtype=np.float64), nm.Tensor(a, dtype=np.float64), bandwidth=1.0)
        assert float(same.data) == pytest.approx(0.0, abs=1e-12)

    def test_adam_zero_gradient_leaves_params(self):
        params = {"w": np.array([1.5, -2.0], dtype=np.float32)}
        before = params["w"].copy()
        state = nm.OptimizerState()
        nm.adam_step(params, {"w": np.zeros(2, dtype=np.float32)}, state)
        assert np.array_equal(params["w"], before)

    def test_ops_deterministic(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((3, 4, 2)).astype(np.float32)
        k = rng.standard_normal((3, 2, 5)).astype(np.float32)
        y1 = nm.conv1d_same(nm.Tensor(x), nm.Tensor(k)).data
        y2 = nm.conv1d_same(nm.Tensor(x), nm.Tensor(k)).data
        assert np.array_equal(y1, y2)

    def test_backward_accumulates_through_shared_node(self):
        x = nm.Tensor(np.array([[2.0]]), dtype=np.float64)
        y = nm.add(x, x)  # dy/dx = 2
        nm.backward(y)
        assert x.grad.item() == 2.0


class TestErrors:
    def test_conv_even_kernel_rejected(self):
        x = nm.Tensor(np.zeros((1, 4, 2)))
        k = nm.Tensor(np.zeros((2, 2, 3)))
        with pytest.raises(nm.ShapeError):
            nm.conv1d_same(x, k)

    def test_smoothing_epsilon_one_rejected(self):
        p = nm.Tensor(np.full((2, 3), 1 / 3))
        with pytest.raises(ValueError):
            nm.smoothed_cross_entropy(p, [0, 1], 1.0)

    def test_mmd_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            nm.mmd_sq(nm.Tensor(np.zeros((0, 3))), nm.Tensor(np.zeros((2, 3))), bandwidth=1.0)

    def test_mmd_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            nm.mmd_sq(nm.Tensor(np.zeros((2, 3))), nm.Tensor(np.zeros((2, 4))), bandwidth=1.0)

    def test_backward_requires_scalar(self):
        x = nm.Tensor(np.zeros((2, 2)))
        y = nm.relu(x)
        with pytest.raises(nm.GraphError):
            nm.backward(y)

    def test_backward_without_graph(self):
        with pytest.raises(nm.GraphError):
            nm.backward(nm.Tensor(np.array(1.0)))

    def test_adam_nonfinite_gradient_names_param(self):
        params = {"w": np.ones(2, dtype=np.float32)}
        grads = {"w": np.array([np.nan, 0.0], dtype=np.float32)}
        with pytest.raises(ValueError, match="w"):
            nm.adam_step(params, grads, nm.OptimizerState())
