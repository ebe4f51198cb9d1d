import numpy as np
import pytest

from followrl import AdamState, MlpNet, opt_step, soft_update
from followrl.nets import hard_update


def straight_line_forward(net, x):
    """Independent re-implementation of the forward arithmetic."""
    h = np.asarray(x, dtype=float)
    for i in range(net.n_layers):
        z = h @ net.weights[i] + net.biases[i]
        if i < net.n_layers - 1:
            h = np.where(z > 0, z, 0.0)
        elif net.out_activation == "tanh":
            h = np.tanh(z)
        else:
            h = z
    return h


def numeric_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
        it.iternext()
    return g


ARCHS = [
    ([4, 32, 32, 1], "tanh"),      # actor / BC
    ([5, 32, 32, 1], "linear"),    # critic
    ([3, 16, 16, 2], "tanh"),      # control net
]


class TestForward:
    def test_zero_net_outputs_zero(self):
        net = MlpNet([4, 8, 1], "linear", seed=0)
        for p in net.parameters():
            p[...] = 0.0
        assert np.all(net.forward(np.ones(4)) == 0.0)

    def test_identity_tanh_at_zero(self):
        net = MlpNet([1, 1], "tanh", seed=0)
        net.weights[0][...] = 1.0
        net.biases[0][...] = 0.0
        assert net.forward(np.zeros(1))[0] == 0.0

    def test_matches_straight_line_oracle(self):
        rng = np.random.default_rng(7)
        for sizes, act in ARCHS:
            net = MlpNet(sizes, act, seed=11)
            x = rng.standard_normal((5, sizes[0]))
            assert np.allclose(net.forward(x), straight_line_forward(net, x), atol=1e-12)

    def test_tanh_bounded(self):
        net = MlpNet([4, 32, 32, 1], "tanh", seed=3)
        x = np.random.default_rng(0).standard_normal((100, 4)) * 10
        y = net.forward(x)
        assert np.all(np.abs(y) < 1.0)

    def test_dimension_mismatch_rejected(self):
        net = MlpNet([4, 8, 1], "linear", seed=0)
        with pytest.raises(ValueError):
            net.forward(np.ones(3))


class TestBackward:
    @pytest.mark.parametrize("sizes,act", ARCHS)
    def test_finite_difference_check(self, sizes, act):
        rng = np.random.default_rng(sum(sizes))
        for trial in range(3):
            net = MlpNet(sizes, act, seed=trial)
            x = rng.standard_normal(sizes[0])
            w = rng.standard_normal(sizes[-1])  # random scalarization

            def loss():
                return float(net.forward(x) @ w)

            out, cache = net.forward(x, cache=True)
            grads = net.backward(cache, w)
            flat = grads["weights"] + grads["biases"]
            for p, g in zip(net.parameters(), flat):
                num = numeric_grad(loss, p)
                scale = np.maximum(np.abs(num), 1e-6)
                assert np.max(np.abs(g - num) / scale) < 1e-4
            g_in = numeric_grad(loss, x)
            assert np.allclose(grads["input"], g_in, atol=1e-6)

    def test_zero_output_gradient(self):
        net = MlpNet([4, 8, 2], "linear", seed=5)
        _, cache = net.forward(np.ones(4), cache=True)
        grads = net.backward(cache, np.zeros(2))
        assert all(np.all(g == 0) for g in grads["weights"] + grads["biases"])

    def test_tanh_unit_derivative_at_zero(self):
        net = MlpNet([1, 1], "tanh", seed=0)
        net.weights[0][...] = 1.0
        net.biases[0][...] = 0.0
        _, cache = net.forward(np.zeros(1), cache=True)
        grads = net.backward(cache, np.array([3.0]))
        assert grads["input"][0] == pytest.approx(3.0)

    def test_stale_cache_rejected(self):
        net = MlpNet([2, 2], "linear", seed=0)
        with pytest.raises(ValueError):
            net.backward(None, np.zeros(2))


class TestAdam:
    def test_zero_gradient_no_change(self):
        net = MlpNet([2, 3, 1], "linear", seed=0)
        before = [p.copy() for p in net.parameters()]
        grads = {"weights": [np.zeros_like(w) for w in net.weights],
                 "biases": [np.zeros_like(b) for b in net.biases]}
        opt_step(net, grads, AdamState(net))
        for b, p in zip(before, net.parameters()):
            assert np.array_equal(b, p)

    def test_first_step_is_minus_lr(self):
        net = MlpNet([1, 1], "linear", seed=0)
        net.weights[0][...] = 0.5
        net.biases[0][...] = 0.0
        grads = {"weights": [np.ones((1, 1))], "biases": [np.zeros(1)]}
        opt_step(net, grads, AdamState(net, lr=0.001))
        # bias-corrected first step: -lr * g/(|g| + eps) ~ -lr
        assert net.weights[0][0, 0] == pytest.approx(0.5 - 0.001, abs=1e-8)

    def test_deterministic(self):
        runs = []
        for _ in range(2):
            net = MlpNet([3, 4, 1], "linear", seed=9)
            state = AdamState(net)
            rng = np.random.default_rng(1)
            for _ in range(20):
                x = rng.standard_normal(3)
                _, cache = net.forward(x, cache=True)
                grads = net.backward(cache, np.ones(1))
                opt_step(net, grads, state)
            runs.append([p.copy() for p in net.parameters()])
        for a, b in zip(*runs):
            assert np.array_equal(a, b)


class TestSoftUpdate:
    def test_tau_one_copies(self):
        src = MlpNet([2, 3, 1], "linear", seed=1)
        tgt = MlpNet([2, 3, 1], "linear", seed=2)
        soft_update(tgt, src, 1.0)
        for a, b in zip(tgt.parameters(), src.parameters()):
            assert np.array_equal(a, b)

    def test_tau_zero_identity(self):
        src = MlpNet([2, 3, 1], "linear", seed=1)
        tgt = MlpNet([2, 3, 1], "linear", seed=2)
        before = [p.copy() for p in tgt.parameters()]
        soft_update(tgt, src, 0.0)
        for a, b in zip(before, tgt.parameters()):
            assert np.array_equal(a, b)

    def test_scalar_instance(self):
        src = MlpNet([1, 1], "linear", seed=0)
        tgt = MlpNet([1, 1], "linear", seed=0)
        src.weights[0][...] = 1.0
        tgt.weights[0][...] = 0.0
        soft_update(tgt, src, 0.001)
        assert tgt.weights[0][0, 0] == pytest.approx(0.001)

    def test_geometric_convergence(self):
        src = MlpNet([3, 8, 1], "tanh", seed=4)
        tgt = MlpNet([3, 8, 1], "tanh", seed=5)
        tau = 0.01
        init_dev = max(np.max(np.abs(a - b))
                       for a, b in zip(tgt.parameters(), src.parameters()))
        for k in range(1, 501):
            soft_update(tgt, src, tau)
        dev = max(np.max(np.abs(a - b))
                  for a, b in zip(tgt.parameters(), src.parameters()))
        assert dev == pytest.approx((1 - tau) ** 500 * init_dev, abs=1e-9)

    def test_architecture_mismatch(self):
        with pytest.raises(ValueError):
            soft_update(MlpNet([2, 1], "linear", seed=0),
                        MlpNet([2, 2, 1], "linear", seed=0), 0.5)


class TestSaveLoad:
    def test_round_trip_bit_exact(self, tmp_path):
        for sizes, act in ARCHS:
            net = MlpNet(sizes, act, seed=8)
            path = str(tmp_path / "net.bin")
            net.save(path)
            loaded = MlpNet.load(path)
            assert loaded.sizes == net.sizes
            assert loaded.out_activation == net.out_activation
            for a, b in zip(net.parameters(), loaded.parameters()):
                assert np.array_equal(a, b)

    def test_manifest_written(self, tmp_path):
        net = MlpNet([4, 32, 32, 1], "tanh", seed=0)
        path = str(tmp_path / "net.bin")
        net.save(path)
        import json
        with open(path + ".manifest.json") as fh:
            man = json.load(fh)
        assert man["sizes"] == [4, 32, 32, 1]
        assert man["n_parameters"] == 4 * 32 + 32 + 32 * 32 + 32 + 32 + 1

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError):
            MlpNet.load(str(path))


def test_hard_update():
    src = MlpNet([2, 3, 1], "linear", seed=1)
    tgt = MlpNet([2, 3, 1], "linear", seed=2)
    hard_update(tgt, src)
    for a, b in zip(tgt.parameters(), src.parameters()):
        assert np.array_equal(a, b)
