import math

import numpy as np
import pytest

from stcp.errors import ConfigError, ShapeError
from stcp.losses import L1, GaussianNll, Mse, Pinball, loss_value
from stcp.mlp import (
    MlpConfig,
    ModelParams,
    RangeScaler,
    backward,
    forward,
    init_params,
    load_model,
    mc_dropout,
    mean_sigma,
    save_model,
)
from stcp.rng import Stream


def manual_params(config, weights, biases):
    return ModelParams(
        config=config,
        weights=[np.asarray(w, dtype=float) for w in weights],
        biases=[np.asarray(b, dtype=float) for b in biases],
    )


class TestConfig:
    def test_needs_two_layers(self):
        with pytest.raises(ConfigError):
            MlpConfig(layer_sizes=(4,))

    def test_dropout_range(self):
        with pytest.raises(ConfigError):
            MlpConfig(layer_sizes=(2, 2), dropout_rate=1.0)
        MlpConfig(layer_sizes=(2, 2), dropout_rate=0.0)

    def test_unknown_activation_and_head(self):
        with pytest.raises(ConfigError):
            MlpConfig(layer_sizes=(2, 2), activation="relu")
        with pytest.raises(ConfigError):
            MlpConfig(layer_sizes=(2, 2), head="softmax")

    def test_mean_logvar_doubles_final_width(self):
        cfg = MlpConfig(layer_sizes=(3, 5, 4), head="mean_logvar")
        assert cfg.widths() == [(3, 5), (5, 8)]
        assert cfg.n_out == 4


class TestForward:
    def test_identity_single_linear_layer(self):
        cfg = MlpConfig(layer_sizes=(3, 3))
        p = manual_params(cfg, [np.eye(3)], [np.zeros(3)])
        x = np.array([0.5, -1.0, 2.0])
        assert np.array_equal(forward(p, x), x)

    def test_hand_computed_two_layer(self):
        # x=[1,0] -> z1 = [0.5, -0.25] -> h = tanh(z1) -> out = h.W2 + b2
        cfg = MlpConfig(layer_sizes=(2, 2, 1))
        w1 = [[0.5, -0.25], [0.3, 0.8]]
        w2 = [[1.0], [-2.0]]
        p = manual_params(cfg, [w1, w2], [[0.0, 0.0], [0.25]])
        out = forward(p, np.array([1.0, 0.0]))
        expect = math.tanh(0.5) * 1.0 + math.tanh(-0.25) * (-2.0) + 0.25
        assert out[0] == pytest.approx(expect, rel=1e-14)

    def test_dropout_zero_train_equals_eval(self):
        cfg = MlpConfig(layer_sizes=(4, 8, 3), dropout_rate=0.0)
        p = init_params(cfg, seed=1)
        x = Stream(2).uniform(4)
        assert np.array_equal(forward(p, x), forward(p, x, train=True, stream=Stream(3)))

    def test_eval_mode_is_pure(self):
        cfg = MlpConfig(layer_sizes=(4, 8, 3), dropout_rate=0.5)
        p = init_params(cfg, seed=1)
        x = Stream(2).uniform(4)
        assert np.array_equal(forward(p, x), forward(p, x))

    def test_train_mode_dropout_needs_stream(self):
        cfg = MlpConfig(layer_sizes=(2, 4, 1), dropout_rate=0.5)
        p = init_params(cfg, seed=1)
        with pytest.raises(ConfigError):
            forward(p, np.zeros(2), train=True)

    def test_batch_and_vector_agree(self):
        cfg = MlpConfig(layer_sizes=(3, 6, 2))
        p = init_params(cfg, seed=4)
        xs = Stream(5).uniform(12).reshape(4, 3)
        batch = forward(p, xs)
        assert batch.shape == (4, 2)
        for i in range(4):
            # ulp-level slack: BLAS picks different kernels for gemm/gemv
            assert np.allclose(batch[i], forward(p, xs[i]), rtol=1e-13, atol=1e-15)

    def test_shape_mismatch(self):
        cfg = MlpConfig(layer_sizes=(3, 2))
        p = init_params(cfg, seed=0)
        with pytest.raises(ShapeError):
            forward(p, np.zeros(4))

    def test_mean_logvar_head_output_width(self):
        cfg = MlpConfig(layer_sizes=(2, 4, 3), head="mean_logvar")
        p = init_params(cfg, seed=7)
        out = forward(p, np.zeros(2))
        assert out.shape == (6,)
        mu, sigma = mean_sigma(out, 3)
        assert mu.shape == (3,) and sigma.shape == (3,)
        assert (sigma >= 1e-6).all()


class TestMcDropout:
    def toy_saturated_net(self):
        # hidden tanh(40) rounds to exactly 1.0, output weight 1: the MC
        # output is the bare inverted-dropout mask, mean 1 by construction.
        cfg = MlpConfig(layer_sizes=(1, 1, 1), dropout_rate=0.5)
        return manual_params(cfg, [[[40.0]], [[1.0]]], [[0.0], [0.0]])

    def test_bernoulli_expectation(self):
        p = self.toy_saturated_net()
        mean, std = mc_dropout(p, np.array([1.0]), passes=10_000, stream=Stream(0))
        assert abs(mean[0] - 1.0) <= 0.03
        assert std[0] > 0.5  # per-pass values are 0 or 2

    def test_std_floor_without_dropout(self):
        cfg = MlpConfig(layer_sizes=(2, 4, 2), dropout_rate=0.0)
        p = init_params(cfg, seed=9)
        x = np.array([0.3, -0.7])
        mean, std = mc_dropout(p, x, passes=16, stream=Stream(1))
        # identical passes; the axis-0 mean may still round by an ulp
        assert np.allclose(mean, forward(p, x), rtol=0, atol=1e-14)
        assert np.all(std == 1e-6)

    def test_passes_validation(self):
        p = self.toy_saturated_net()
        with pytest.raises(ConfigError):
            mc_dropout(p, np.array([1.0]), passes=1, stream=Stream(0))

    def test_std_of_mean_shrinks_like_sqrt_passes(self):
        p = self.toy_saturated_net()
        stream = Stream(12)
        x = np.array([1.0])
        reps = 160
        means_small = np.array([mc_dropout(p, x, 32, stream)[0][0] for _ in range(reps)])
        means_big = np.array([mc_dropout(p, x, 512, stream)[0][0] for _ in range(reps)])
        ratio = means_small.std(ddof=1) / means_big.std(ddof=1)
        # expected sqrt(512/32) = 4; generous band for 160 repeats
        assert 3.0 <= ratio <= 5.0

    def test_deterministic_given_stream(self):
        p = self.toy_saturated_net()
        a = mc_dropout(p, np.array([1.0]), 64, Stream(5))
        b = mc_dropout(p, np.array([1.0]), 64, Stream(5))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def fd_gradient_check(cfg, kind, seed, train=False):
    """Central finite differences vs backward() for every parameter."""
    p = init_params(cfg, seed)
    data = Stream(seed + 1)
    x = (data.uniform(2 * cfg.n_in) * 2 - 1).reshape(2, cfg.n_in)
    out0 = forward(p, x)
    m = cfg.n_out
    # targets held away from L1/pinball kinks by at least 0.1
    signs = np.where(data.uniform(2 * m).reshape(2, m) < 0.5, -1.0, 1.0)
    target = out0[:, :m] + signs * (0.1 + data.uniform(2 * m).reshape(2, m))

    def eval_loss():
        out = forward(p, x, train=train, stream=Stream(99) if train else None)
        return loss_value(kind, out, target)

    value, gw, gb = backward(p, x, target, kind, train=train, stream=Stream(99) if train else None)
    assert np.isfinite(value)
    h = 1e-5
    worst = 0.0
    for arrs, grads in ((p.weights, gw), (p.biases, gb)):
        for arr, grad in zip(arrs, grads):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for idx in range(flat.size):
                keep = flat[idx]
                flat[idx] = keep + h
                up = eval_loss()
                flat[idx] = keep - h
                dn = eval_loss()
                flat[idx] = keep
                fd = (up - dn) / (2 * h)
                denom = max(abs(fd), abs(gflat[idx]), 1e-8)
                worst = max(worst, abs(gflat[idx] - fd) / denom)
    return worst


class TestBackward:
    @pytest.mark.parametrize("activation", ["tanh", "gelu"])
    @pytest.mark.parametrize(
        "kind", [Mse(), L1(), Pinball(0.05), Pinball(0.95)], ids=["mse", "l1", "p05", "p95"]
    )
    def test_finite_difference_all_layers(self, activation, kind):
        cfg = MlpConfig(layer_sizes=(3, 5, 4, 2), activation=activation)
        assert fd_gradient_check(cfg, kind, seed=11) <= 1e-4

    @pytest.mark.parametrize("activation", ["tanh", "gelu"])
    def test_finite_difference_nll_head(self, activation):
        cfg = MlpConfig(layer_sizes=(3, 5, 2), activation=activation, head="mean_logvar")
        assert fd_gradient_check(cfg, GaussianNll(), seed=13) <= 1e-4

    def test_finite_difference_through_dropout(self):
        # identical masks on both sides via a reset stream
        cfg = MlpConfig(layer_sizes=(3, 6, 2), dropout_rate=0.4)
        assert fd_gradient_check(cfg, Mse(), seed=17, train=True) <= 1e-4

    def test_zero_loss_zero_gradient(self):
        cfg = MlpConfig(layer_sizes=(2, 3, 2))
        p = init_params(cfg, seed=3)
        x = np.array([[0.4, -0.2]])
        target = forward(p, x)
        value, gw, gb = backward(p, x, target, Mse())
        assert value == 0.0
        assert all(np.all(g == 0.0) for g in gw + gb)

    def test_mse_output_gradient_linearity(self):
        cfg = MlpConfig(layer_sizes=(2, 3, 1))
        p = init_params(cfg, seed=5)
        x = np.array([[0.1, 0.9]])
        out = forward(p, x)
        _, gw1, _ = backward(p, x, out + 1.0, Mse())
        _, gw2, _ = backward(p, x, out + 2.0, Mse())
        assert np.allclose(gw2[-1], 2.0 * gw1[-1], rtol=1e-12)


class TestInit:
    def test_deterministic_and_seed_sensitive(self):
        cfg = MlpConfig(layer_sizes=(4, 8, 2))
        a, b, c = init_params(cfg, 1), init_params(cfg, 1), init_params(cfg, 2)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_glorot_bounds(self):
        cfg = MlpConfig(layer_sizes=(10, 20, 5))
        p = init_params(cfg, 8)
        for w, (n_in, n_out) in zip(p.weights, cfg.widths()):
            limit = math.sqrt(6.0 / (n_in + n_out))
            assert np.abs(w).max() <= limit
        assert all(np.all(b == 0.0) for b in p.biases)


class TestScaler:
    def test_roundtrip(self):
        s = RangeScaler(-3.0, 7.0)
        vals = np.linspace(-3, 7, 13)
        assert np.abs(s.inverse(s.transform(vals)) - vals).max() <= 1e-12
        assert s.transform(np.array([-3.0]))[0] == -1.0
        assert s.transform(np.array([7.0]))[0] == 1.0

    def test_fit_constant_field(self):
        s = RangeScaler.fit(np.full(5, 2.0))
        assert s.lo < 2.0 < s.hi

    def test_scale_width(self):
        s = RangeScaler(0.0, 4.0)
        assert s.scale_width(np.array([1.0]))[0] == 2.0

    def test_validation(self):
        with pytest.raises(ConfigError):
            RangeScaler(1.0, 1.0)


class TestCheckpoint:
    def test_roundtrip_bitwise(self, tmp_path):
        cfg = MlpConfig(layer_sizes=(3, 7, 2), activation="gelu", dropout_rate=0.1)
        p = init_params(cfg, seed=21)
        p.x_scale = RangeScaler(-1.5, 2.5)
        p.y_scale = RangeScaler(0.0, 0.125)
        save_model(p, tmp_path / "m")
        q = load_model(tmp_path / "m")
        assert q.config == cfg
        assert q.seed == 21
        assert q.x_scale == p.x_scale and q.y_scale == p.y_scale
        for wa, wb in zip(p.weights, q.weights):
            assert wa.tobytes() == wb.tobytes()
        for ba, bb in zip(p.biases, q.biases):
            assert ba.tobytes() == bb.tobytes()
        x = Stream(1).uniform(3)
        assert np.array_equal(forward(p, x), forward(q, x))
