"""Minimal fully-connected network machinery in float64 numpy.

Explicit forward/backward for the fixed MLP graph (ReLU hidden layers,
linear or tanh head), Adam updates, hard/soft target copies, and a small
binary parameter format that round-trips bit-exactly.
"""

import json
import struct

import numpy as np

MAGIC = b"FRLN"
_ACT_CODES = {"linear": 0, "tanh": 1}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


class MlpNet:
    """Stack of affine layers, ReLU between them, configurable head."""

    def __init__(self, sizes, out_activation="linear", seed=None):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if out_activation not in _ACT_CODES:
            raise ValueError(f"unsupported output activation {out_activation!r}")
        self.sizes = list(int(s) for s in sizes)
        self.out_activation = out_activation
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(rng.uniform(-bound, bound, size=n_out))

    @property
    def n_layers(self):
        return len(self.weights)

    def parameters(self):
        return self.weights + self.biases

    def copy(self):
        net = MlpNet.__new__(MlpNet)
        net.sizes = list(self.sizes)
        net.out_activation = self.out_activation
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def forward(self, x, cache=False):
        """Forward pass for a single vector or a batch (rows = samples).

        With cache=True returns (output, cache) for a later backward().
        """
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        h = x.reshape(1, -1) if squeeze else x
        if h.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {h.shape[1]} != {self.sizes[0]}")
        pre, post = [], [h]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            if i < self.n_layers - 1:
                h = np.maximum(z, 0.0)
            elif self.out_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
            post.append(h)
        out = h[0] if squeeze else h
        if cache:
            return out, {"pre": pre, "post": post, "squeeze": squeeze}
        return out

    def backward(self, cache, dout):
        """Exact gradients for every parameter and the input, given the
        gradient of a scalar loss w.r.t. the network output."""
        if cache is None or "post" not in cache:
            raise ValueError("backward needs the cache from a forward call")
        dout = np.asarray(dout, dtype=float)
        if cache["squeeze"]:
            dout = dout.reshape(1, -1)
        dw = [None] * self.n_layers
        db = [None] * self.n_layers
        grad = dout
        for i in range(self.n_layers - 1, -1, -1):
            z = cache["pre"][i]
            if i == self.n_layers - 1:
                if self.out_activation == "tanh":
                    grad = grad * (1.0 - np.tanh(z) ** 2)
            else:
                grad = grad * (z > 0.0)
            h_in = cache["post"][i]
            dw[i] = h_in.T @ grad
            db[i] = grad.sum(axis=0)
            grad = grad @ self.weights[i].T
        din = grad[0] if cache["squeeze"] else grad
        return {"weights": dw, "biases": db, "input": din}

    def save(self, path):
        """Flat binary file: magic, layer count, sizes, activation code,
        then all float64 parameters; plus a sidecar .manifest.json."""
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(self.sizes)))
            fh.write(struct.pack(f"<{len(self.sizes)}I", *self.sizes))
            fh.write(struct.pack("<I", _ACT_CODES[self.out_activation]))
            for w, b in zip(self.weights, self.biases):
                fh.write(np.ascontiguousarray(w).tobytes())
                fh.write(np.ascontiguousarray(b).tobytes())
        manifest = {
            "format": "followrl-mlp-v1",
            "sizes": self.sizes,
            "out_activation": self.out_activation,
            "dtype": "float64",
            "n_parameters": int(sum(p.size for p in self.parameters())),
        }
        with open(str(path) + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(4) != MAGIC:
                raise ValueError(f"{path} is not a followrl parameter file")
            (n,) = struct.unpack("<I", fh.read(4))
            sizes = struct.unpack(f"<{n}I", fh.read(4 * n))
            (act,) = struct.unpack("<I", fh.read(4))
            net = cls(sizes, out_activation=_ACT_NAMES[act], seed=0)
            for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                net.weights[i] = np.frombuffer(
                    fh.read(8 * n_in * n_out)).reshape(n_in, n_out).copy()
                net.biases[i] = np.frombuffer(fh.read(8 * n_out)).copy()
        return net


class AdamState:
    """Adaptive-moment optimizer state for one MlpNet."""

    def __init__(self, net: MlpNet, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]


def opt_step(net: MlpNet, grads, state: AdamState):
    """One Adam update in place; grads is the dict from net.backward()."""
    flat = grads["weights"] + grads["biases"]
    params = net.parameters()
    if len(flat) != len(params):
        raise ValueError("gradient/parameter count mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, flat, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)


def hard_update(target: MlpNet, source: MlpNet):
    _check_same_arch(target, source)
    for pt, ps in zip(target.parameters(), source.parameters()):
        pt[...] = ps


def soft_update(target: MlpNet, source: MlpNet, tau):
    """Polyak averaging: target <- tau*source + (1 - tau)*target."""
    if not (0.0 <= tau <= 1.0):
        raise ValueError("tau must lie in [0, 1]")
    _check_same_arch(target, source)
    for pt, ps in zip(target.parameters(), source.parameters()):
        pt *= 1.0 - tau
        pt += tau * ps


def _check_same_arch(a: MlpNet, b: MlpNet):
    if a.sizes != b.sizes or a.out_activation != b.out_activation:
        raise ValueError("architecture mismatch")
