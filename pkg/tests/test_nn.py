import math

import numpy as np
import pytest

from affectfusion import nn
from affectfusion.nn import (
    DenseLayerParams,
    SgdConfig,
    ShapeError,
    cross_entropy_loss,
    dense_backward,
    dense_forward,
    relu,
    sgd_step,
    softmax_temperature,
)

from helpers import central_difference


class TestDenseForward:
    def test_identity_weights(self):
        layer = DenseLayerParams(np.eye(2), np.zeros(2))
        assert np.array_equal(dense_forward(layer, [3.0, -1.0]), [3.0, -1.0])

    def test_zero_weights_pass_bias(self):
        layer = DenseLayerParams(np.zeros((2, 3)), np.array([5.0, 7.0]))
        assert np.array_equal(dense_forward(layer, [9.0, -2.0, 4.4]), [5.0, 7.0])

    def test_hand_matvec(self):
        layer = DenseLayerParams(np.array([[1.0, 2.0], [3.0, 4.0]]), np.zeros(2))
        assert np.array_equal(dense_forward(layer, [1.0, 1.0]), [3.0, 7.0])

    def test_dimension_mismatch_rejected(self):
        layer = DenseLayerParams(np.eye(2), np.zeros(2))
        with pytest.raises(ShapeError):
            dense_forward(layer, [1.0, 2.0, 3.0])

    def test_bias_shape_rejected(self):
        with pytest.raises(ShapeError):
            DenseLayerParams(np.eye(2), np.zeros(3))

    def test_linearity_with_zero_bias(self, rng):
        layer = DenseLayerParams(rng.normal(size=(4, 6)), np.zeros(4))
        x, y = rng.normal(size=6), rng.normal(size=6)
        a, b = 1.7, -0.3
        lhs = dense_forward(layer, a * x + b * y)
        rhs = a * dense_forward(layer, x) + b * dense_forward(layer, y)
        assert np.allclose(lhs, rhs, atol=1e-12, rtol=0)

    def test_batched_matches_per_row(self, rng):
        layer = DenseLayerParams(rng.normal(size=(3, 5)), rng.normal(size=3))
        batch = rng.normal(size=(7, 5))
        out = dense_forward(layer, batch)
        for i in range(7):
            assert np.allclose(out[i], dense_forward(layer, batch[i]), atol=1e-15)


class TestRelu:
    def test_zeros(self):
        assert np.array_equal(relu([0.0, 0.0]), [0.0, 0.0])

    def test_mixed_signs(self):
        assert np.array_equal(relu([-2.0, 3.0]), [0.0, 3.0])

    def test_sign_boundary(self):
        assert np.array_equal(relu([1e-9, -1e-9]), [1e-9, 0.0])


class TestSoftmaxTemperature:
    def test_uniform_for_equal_logits(self):
        p = softmax_temperature(np.full(7, 2.5), temperature=2.0)
        assert np.allclose(p, 1.0 / 7.0, atol=1e-15)

    def test_derived_two_class(self):
        # exp(ln4 / 2) = 2, so probabilities are (1/3, 2/3)
        p = softmax_temperature([0.0, math.log(4.0)], temperature=2.0)
        assert np.allclose(p, [1.0 / 3.0, 2.0 / 3.0], atol=1e-15)

    @pytest.mark.parametrize("temperature", [0.5, 1.0, 2.0, 10.0])
    def test_argmax_invariance(self, temperature, rng):
        for _ in range(50):
            z = rng.normal(size=7) * 10
            p = softmax_temperature(z, temperature)
            assert np.argmax(p) == np.argmax(z)

    def test_simplex_point(self, rng):
        for _ in range(100):
            z = rng.normal(size=7) * rng.uniform(0.1, 50)
            p = softmax_temperature(z, rng.uniform(0.2, 10))
            assert (p >= 0).all()
            assert abs(p.sum() - 1.0) <= 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            softmax_temperature([np.nan, 0.0], 2.0)
        with pytest.raises(ValueError):
            softmax_temperature([np.inf, 0.0], 2.0)

    def test_bad_temperature_rejected(self):
        with pytest.raises(ValueError):
            softmax_temperature([0.0, 1.0], 0.0)

    def test_extreme_logits_stable(self):
        p = softmax_temperature([1000.0, -1000.0], 1.0)
        assert np.isfinite(p).all() and abs(p.sum() - 1.0) <= 1e-12


class TestCrossEntropy:
    def test_one_hot_target_gives_zero(self):
        assert cross_entropy_loss([0.0, 1.0, 0.0], 1) == 0.0

    def test_uniform_seven(self):
        p = np.full(7, 1.0 / 7.0)
        assert cross_entropy_loss(p, 3) == pytest.approx(math.log(7), abs=1e-12)

    def test_derived_quarter(self):
        assert cross_entropy_loss([0.5, 0.25, 0.25], 1) == pytest.approx(
            math.log(4), abs=1e-12
        )

    def test_target_out_of_range(self):
        with pytest.raises(IndexError):
            cross_entropy_loss([0.5, 0.5], 2)

    def test_not_normalized_rejected(self):
        with pytest.raises(ValueError):
            cross_entropy_loss([0.5, 0.4], 1)

    def test_nonnegative_and_zero_iff_certain(self, rng):
        for _ in range(100):
            p = softmax_temperature(rng.normal(size=7), 1.0)
            target = int(rng.integers(7))
            loss = cross_entropy_loss(p, target)
            assert loss >= 0.0
            assert (loss == 0.0) == (p[target] == 1.0)


class TestDenseBackward:
    def test_zero_layer_squared_loss_to_zero_target(self):
        # y = 0 everywhere, squared loss gradient 2*y = 0 -> all grads zero
        layer = DenseLayerParams(np.zeros((3, 4)), np.zeros(3))
        x = np.array([1.0, -2.0, 0.5, 3.0])
        y = dense_forward(layer, x)
        d_w, d_b, d_x = dense_backward(layer, x, 2.0 * y)
        assert not d_w.any() and not d_b.any() and not d_x.any()

    def test_matches_finite_differences(self, rng):
        layer = DenseLayerParams(rng.normal(size=(3, 5)), rng.normal(size=3))
        x = rng.normal(size=5)
        target = rng.normal(size=3)

        def loss():
            diff = dense_forward(layer, x) - target
            return float(diff @ diff)

        diff = dense_forward(layer, x) - target
        d_w, d_b, _ = dense_backward(layer, x, 2.0 * diff)
        arrays = {"W": layer.weights, "b": layer.bias}
        for name, grad in (("W", d_w), ("b", d_b)):
            for idx in range(arrays[name].size):
                fd = central_difference(loss, arrays, name, idx)
                assert abs(grad.flat[idx] - fd) / max(abs(fd), 1e-6) < 1e-4


class TestSgdStep:
    def test_no_gradient_no_decay_is_identity(self):
        params = {"layer.W": np.array([[1.0, 2.0]]), "layer.b": np.array([3.0])}
        grads = {k: np.zeros_like(v) for k, v in params.items()}
        out = sgd_step(params, grads, SgdConfig(0.1, 0.0))
        for k in params:
            assert np.array_equal(out[k], params[k])

    def test_decay_only(self):
        # w = 1, g = 0, lr = 0.1, wd = 0.5 -> 1 - 0.1*0.5 = 0.95
        out = sgd_step(
            {"l.W": np.array([1.0])},
            {"l.W": np.array([0.0])},
            SgdConfig(0.1, 0.5),
        )
        assert out["l.W"][0] == pytest.approx(0.95, abs=1e-15)

    def test_reference_hyperparameters(self):
        # w = 2, g = 1, lr = 0.005, wd = 0.005 -> 2 - 0.005*(1 + 0.01) = 1.994950
        out = sgd_step(
            {"l.W": np.array([2.0])},
            {"l.W": np.array([1.0])},
            SgdConfig(0.005, 0.005),
        )
        assert out["l.W"][0] == pytest.approx(1.99495, abs=1e-12)

    def test_bias_excluded_from_decay(self):
        params = {"l.W": np.array([1.0]), "l.b": np.array([1.0])}
        grads = {"l.W": np.array([0.0]), "l.b": np.array([0.0])}
        out = sgd_step(params, grads, SgdConfig(0.1, 0.5))
        assert out["l.W"][0] == pytest.approx(0.95)
        assert out["l.b"][0] == 1.0

    def test_lstm_weight_names_decay(self):
        assert nn.decays("layer1.W_xf")
        assert nn.decays("proj_rgb.W")
        assert not nn.decays("layer1.b_f")
        assert not nn.decays("output.b")

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            SgdConfig(0.0)
        with pytest.raises(ValueError):
            SgdConfig(0.1, -1.0)
