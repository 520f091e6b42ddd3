import numpy as np
import pytest

from conftest import assert_close_rel, finite_diff
from fairprop import autodiff as ad
from fairprop.nn import (
    AdamState,
    Mlp,
    MlpConfig,
    adam_step,
    cross_entropy,
    init_weights,
    load_checkpoint,
    mlp_forward,
    save_checkpoint,
)


def loop_mlp_oracle(mlp, X):
    """Straight-loop reimplementation of the forward pass."""
    h = X
    last = len(mlp.weights) - 1
    for li, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        out = np.zeros((h.shape[0], W.shape[1]))
        for i in range(h.shape[0]):
            for j in range(W.shape[1]):
                acc = b[j]
                for k in range(h.shape[1]):
                    acc += h[i, k] * W[k, j]
                out[i, j] = acc
        if li != last:
            out = np.maximum(out, 0.0)
        h = out
    return h


class TestMlpForward:
    def test_zero_weights_zero_output(self, rng):
        cfg = MlpConfig(in_dim=3, hidden=[4], out_dim=2)
        mlp = init_weights(cfg, 0)
        mlp.weights = [np.zeros_like(w) for w in mlp.weights]
        tape = ad.Tape()
        out, _ = mlp_forward(mlp, tape, tape.leaf(rng.standard_normal((5, 3))))
        np.testing.assert_array_equal(out.data, np.zeros((5, 2)))

    def test_identity_single_layer(self, rng):
        cfg = MlpConfig(in_dim=3, hidden=[], out_dim=3)
        mlp = Mlp(cfg, [np.eye(3)], [np.zeros(3)])
        X = rng.standard_normal((4, 3))
        tape = ad.Tape()
        out, _ = mlp_forward(mlp, tape, tape.leaf(X))
        np.testing.assert_array_equal(out.data, X)

    def test_matches_loop_oracle(self, rng):
        cfg = MlpConfig(in_dim=4, hidden=[5], out_dim=3)
        mlp = init_weights(cfg, 7)
        X = rng.standard_normal((6, 4))
        tape = ad.Tape()
        out, _ = mlp_forward(mlp, tape, tape.leaf(X))
        np.testing.assert_allclose(out.data, loop_mlp_oracle(mlp, X), atol=1e-12)

    def test_dimension_mismatch(self, rng):
        mlp = init_weights(MlpConfig(in_dim=3, hidden=[4], out_dim=2), 0)
        tape = ad.Tape()
        with pytest.raises(ValueError):
            mlp_forward(mlp, tape, tape.leaf(rng.standard_normal((5, 2))))

    def test_loss_gradient_matches_finite_differences(self, rng):
        cfg = MlpConfig(in_dim=4, hidden=[5], out_dim=3)
        mlp = init_weights(cfg, 3)
        X = rng.standard_normal((6, 4))
        labels = rng.integers(0, 3, size=6)
        mask = np.ones(6, dtype=bool)

        tape = ad.Tape()
        logits, param_tensors = mlp_forward(mlp, tape, tape.leaf(X))
        tape.backward(cross_entropy(logits, labels, mask))

        params = mlp.parameters()
        for pi, pt in enumerate(param_tensors):

            def f(pv):
                probe = mlp.copy()
                new = [p.copy() for p in params]
                new[pi] = pv.reshape(params[pi].shape)
                probe.set_parameters(new)
                t2 = ad.Tape()
                lg, _ = mlp_forward(probe, t2, t2.leaf(X))
                return float(cross_entropy(lg, labels, mask).data[0, 0])

            fd = finite_diff(f, params[pi].reshape(pt.shape) * 1.0)
            assert_close_rel(pt.grad, fd, rtol=1e-4, afloor=1e-7)


class TestInitWeights:
    def test_deterministic_per_seed(self):
        cfg = MlpConfig(in_dim=5, hidden=[4], out_dim=2)
        a, b = init_weights(cfg, 11), init_weights(cfg, 11)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_glorot_bounds(self):
        cfg = MlpConfig(in_dim=7, hidden=[9], out_dim=3)
        mlp = init_weights(cfg, 2)
        for w, (fan_in, fan_out) in zip(mlp.weights, cfg.layer_dims()):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(w) <= limit)
        for b in mlp.biases:
            assert np.array_equal(b, np.zeros_like(b))

    def test_seeds_differ(self):
        cfg = MlpConfig(in_dim=5, hidden=[4], out_dim=2)
        a, b = init_weights(cfg, 1), init_weights(cfg, 2)
        assert any(not np.array_equal(wa, wb) for wa, wb in zip(a.weights, b.weights))


class TestCrossEntropy:
    def test_uniform_row(self):
        tape = ad.Tape()
        loss = cross_entropy(tape.leaf([[0.0, 0.0]]), [0], [True])
        assert loss.data[0, 0] == pytest.approx(np.log(2.0))

    def test_large_logits_stable(self):
        tape = ad.Tape()
        loss = cross_entropy(tape.leaf([[1000.0, 0.0]]), [1], [True])
        assert np.isfinite(loss.data[0, 0]) and loss.data[0, 0] > 100.0

    def test_batch_mean_vs_per_row_oracle(self, rng):
        logits = rng.standard_normal((2, 3))
        labels = [1, 2]

        def row_loss(z, lab):
            z = z - z.max()
            return float(-(z[lab] - np.log(np.exp(z).sum())))

        expected = 0.5 * (row_loss(logits[0], 1) + row_loss(logits[1], 2))
        tape = ad.Tape()
        loss = cross_entropy(tape.leaf(logits), labels, [True, True])
        assert abs(loss.data[0, 0] - expected) <= 1e-12

    def test_row_shift_invariance(self, rng):
        logits = rng.standard_normal((5, 3))
        labels = rng.integers(0, 3, size=5)
        mask = np.ones(5, dtype=bool)
        tape = ad.Tape()
        a = cross_entropy(tape.leaf(logits), labels, mask).data[0, 0]
        b = cross_entropy(tape.leaf(logits + 7.3), labels, mask).data[0, 0]
        assert abs(a - b) <= 1e-9

    def test_node_permutation_equivariance(self, rng):
        logits = rng.standard_normal((6, 3))
        labels = rng.integers(0, 3, size=6)
        mask = rng.random(6) < 0.5
        mask[0] = True
        perm = rng.permutation(6)
        tape = ad.Tape()
        a = cross_entropy(tape.leaf(logits), labels, mask).data[0, 0]
        b = cross_entropy(tape.leaf(logits[perm]), labels[perm], mask[perm]).data[0, 0]
        assert abs(a - b) <= 1e-12

    def test_empty_mask(self, rng):
        tape = ad.Tape()
        with pytest.raises(ValueError):
            cross_entropy(tape.leaf(rng.standard_normal((3, 2))), [0, 1, 0], [False] * 3)


def adam_scalar_oracle(w0, lr, steps):
    """Hand-rolled scalar Adam trace for f(w) = w^2."""
    b1, b2, eps = 0.9, 0.999, 1e-8
    m = v = 0.0
    w = w0
    trace = []
    for t in range(1, steps + 1):
        g = 2.0 * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        w = w - lr * m_hat / (np.sqrt(v_hat) + eps)
        trace.append(w)
    return trace


class TestAdam:
    def test_zero_gradient_no_change(self, rng):
        p = rng.standard_normal((3, 2))
        state = AdamState(lr=0.01, weight_decay=0.0)
        (out,) = adam_step([p.copy()], [np.zeros_like(p)], state)
        np.testing.assert_array_equal(out, p)

    def test_first_step_bounded_by_lr(self, rng):
        p = rng.standard_normal((4, 3))
        g = rng.standard_normal((4, 3)) * 10.0
        state = AdamState(lr=0.05, weight_decay=0.0)
        (out,) = adam_step([p.copy()], [g], state)
        assert np.all(np.abs(out - p) <= 0.05 * (1.0 + 1e-7))

    def test_scalar_trace_matches_oracle(self):
        state = AdamState(lr=0.1, weight_decay=0.0)
        w = np.array([[1.0]])
        got = []
        for _ in range(3):
            (w,) = adam_step([w], [2.0 * w], state)
            got.append(w[0, 0])
        expected = adam_scalar_oracle(1.0, 0.1, 3)
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_shape_mismatch(self, rng):
        state = AdamState()
        with pytest.raises(ValueError):
            adam_step([np.zeros((2, 2))], [np.zeros((3, 2))], state)

    def test_identical_trajectories(self, rng):
        g_seq = [rng.standard_normal((2, 2)) for _ in range(5)]

        def run():
            state = AdamState(lr=0.01, weight_decay=1e-5)
            p = np.ones((2, 2))
            for g in g_seq:
                (p,) = adam_step([p], [g], state)
            return p

        assert np.array_equal(run(), run())


class TestCheckpoint:
    def test_round_trip_reproduces_forward(self, rng, tmp_path):
        cfg = MlpConfig(in_dim=4, hidden=[6], out_dim=2)
        mlp = init_weights(cfg, 5)
        path = tmp_path / "model.json"
        save_checkpoint(path, mlp)
        loaded = load_checkpoint(path)
        X = rng.standard_normal((7, 4))
        t1, t2 = ad.Tape(), ad.Tape()
        a, _ = mlp_forward(mlp, t1, t1.leaf(X))
        b, _ = mlp_forward(loaded, t2, t2.leaf(X))
        np.testing.assert_allclose(a.data, b.data, atol=1e-15)
        assert loaded.seed == 5
