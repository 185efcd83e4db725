"""Layer primitives: 3x3 valid conv, dense, LSTM cell.

Each layer owns its parameter Tensors (float64, seeded uniform fan-in init)
and exposes two call paths: `forward` builds tape nodes for training, `apply`
is a pure-numpy fast path for rollouts and other gradient-free evaluation.
The two paths run the same float64 operations in the same order, so their
outputs are bit-identical.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor


def _init_uniform(rng, shape, fan_in):
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base: a named parameter collection."""

    name: str

    def params(self):
        """Ordered (name, Tensor) pairs for this layer."""
        raise NotImplementedError

    def param_arrays(self):
        return [(n, t.data) for n, t in self.params()]


class Conv2d(Layer):
    """3x3 valid cross-correlation + bias + ReLU (the only conv the nets use)."""

    def __init__(self, name, in_channels, filters, rng):
        self.name = name
        self.in_channels = in_channels
        self.filters = filters
        fan_in = 9 * in_channels
        self.kernel = Tensor(_init_uniform(rng, (3, 3, in_channels, filters), fan_in),
                             needs_grad=True)
        self.bias = Tensor(np.zeros(filters), needs_grad=True)

    def params(self):
        return [(f"{self.name}.kernel", self.kernel), (f"{self.name}.bias", self.bias)]

    def forward(self, x):
        return T.relu(T.conv2d(x, self.kernel, self.bias))

    def apply(self, x):
        B, H, W, C = x.shape
        if C != self.in_channels or H < 3 or W < 3:
            raise ShapeError(f"conv input {x.shape} incompatible with "
                             f"{self.in_channels}-channel 3x3 kernel")
        Ho, Wo = H - 2, W - 2
        windows = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(1, 2))
        patches = windows.transpose(0, 1, 2, 4, 5, 3).reshape(B * Ho * Wo, 9 * C)
        out = patches @ self.kernel.data.reshape(9 * C, self.filters) + self.bias.data
        out = out.reshape(B, Ho, Wo, self.filters)
        return np.where(out > 0.0, out, 0.0)


class Dense(Layer):
    """y = act(x @ W + b), activation in {relu, linear}."""

    def __init__(self, name, in_dim, out_dim, rng, activation="relu"):
        if activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {activation!r}")
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.weight = Tensor(_init_uniform(rng, (in_dim, out_dim), in_dim), needs_grad=True)
        self.bias = Tensor(np.zeros(out_dim), needs_grad=True)

    def params(self):
        return [(f"{self.name}.weight", self.weight), (f"{self.name}.bias", self.bias)]

    def forward(self, x):
        y = T.add(T.matmul(x, self.weight), self.bias)
        return T.relu(y) if self.activation == "relu" else y

    def apply(self, x):
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"dense {self.name}: input dim {x.shape[-1]} != {self.in_dim}")
        y = x @ self.weight.data + self.bias.data
        return np.where(y > 0.0, y, 0.0) if self.activation == "relu" else y


class LSTMCell(Layer):
    """Standard LSTM cell. Gate order in the fused matrices is (i, f, g, o):
    input and forget gates sigmoid, candidate g tanh, output gate sigmoid;
    c' = f*c + i*g, h' = o*tanh(c')."""

    def __init__(self, name, in_dim, units, rng):
        self.name = name
        self.in_dim = in_dim
        self.units = units
        self.w_x = Tensor(_init_uniform(rng, (in_dim, 4 * units), in_dim), needs_grad=True)
        self.w_h = Tensor(_init_uniform(rng, (units, 4 * units), units), needs_grad=True)
        self.bias = Tensor(np.zeros(4 * units), needs_grad=True)

    def params(self):
        return [(f"{self.name}.w_x", self.w_x), (f"{self.name}.w_h", self.w_h),
                (f"{self.name}.bias", self.bias)]

    def forward(self, x, h, c):
        """Tape path; h and c are Tensors of shape (B, units)."""
        z = T.add(T.add(T.matmul(x, self.w_x), T.matmul(h, self.w_h)), self.bias)
        u = self.units
        i = T.sigmoid(T.slice_last(z, 0, u))
        f = T.sigmoid(T.slice_last(z, u, 2 * u))
        g = T.tanh(T.slice_last(z, 2 * u, 3 * u))
        o = T.sigmoid(T.slice_last(z, 3 * u, 4 * u))
        c_new = T.add(T.mul(f, c), T.mul(i, g))
        h_new = T.mul(o, T.tanh(c_new))
        return h_new, c_new

    def apply(self, x, h, c):
        if h.shape[-1] != self.units or c.shape[-1] != self.units:
            raise ShapeError(f"lstm {self.name}: state dims {h.shape[-1]}/{c.shape[-1]} "
                             f"!= {self.units} units")
        if not (np.isfinite(h).all() and np.isfinite(c).all()):
            raise ValueError(f"lstm {self.name}: non-finite recurrent state")
        z = x @ self.w_x.data + h @ self.w_h.data + self.bias.data
        u = self.units
        i = _sigmoid(z[..., :u])
        f = _sigmoid(z[..., u:2 * u])
        g = np.tanh(z[..., 2 * u:3 * u])
        o = _sigmoid(z[..., 3 * u:])
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        return h_new, c_new


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def conv2d_forward(x, kernel, bias):
    """Functional form of the conv layer: ReLU(valid 3x3 cross-correlation + bias).

    x: (H, W, C) single window or (B, H, W, C) batch; kernel (3, 3, C, F).
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if kernel.ndim != 4 or kernel.shape[:2] != (3, 3):
        raise ShapeError(f"kernel must be (3,3,C,F), got {kernel.shape}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    lay = Conv2d.__new__(Conv2d)
    lay.name, lay.in_channels, lay.filters = "conv", kernel.shape[2], kernel.shape[3]
    lay.kernel, lay.bias = Tensor(kernel), Tensor(bias)
    out = lay.apply(x)
    return out[0] if single else out


def dense_forward(x, weights, bias, activation="linear"):
    """Functional dense: act(x @ W + b) with W of shape (n, m)."""
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] != x.shape[-1] or weights.shape[1] != bias.shape[0]:
        raise ShapeError(f"dense shapes disagree: x {x.shape}, W {weights.shape}, b {bias.shape}")
    y = x @ weights + bias
    if activation == "relu":
        return np.where(y > 0.0, y, 0.0)
    if activation == "linear":
        return y
    raise ValueError(f"unknown activation {activation!r}")


def lstm_step(x, state, w_x, w_h, bias):
    """Functional LSTM step on a single vector. state is (hidden, cell);
    returns (output, (hidden', cell')) with output == hidden'."""
    h, c = (np.asarray(state[0], dtype=np.float64), np.asarray(state[1], dtype=np.float64))
    units = h.shape[-1]
    lay = LSTMCell.__new__(LSTMCell)
    lay.name, lay.in_dim, lay.units = "lstm", np.asarray(x).shape[-1], units
    lay.w_x, lay.w_h, lay.bias = Tensor(w_x), Tensor(w_h), Tensor(bias)
    h2, c2 = lay.apply(np.asarray(x, dtype=np.float64), h, c)
    return h2, (h2, c2)
