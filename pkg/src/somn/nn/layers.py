"""Minimal gradient-checked layers over numpy arrays (float64 in training).

Every layer caches what its backward pass needs during forward. Gradients
accumulate into ``grads`` (same keys/shapes as ``params``) until
``zero_grads``. Convolutions use same-padding with stride 1; pooling is
2-wide, stride 2, floor division on odd extents.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Layer:
    """Base layer: stateless by default, parameters in ``params``/``grads``."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        super().__init__()
        limit = 1.0 / np.sqrt(n_in)
        self.params = {"W": rng.uniform(-limit, limit, size=(n_in, n_out)),
                       "b": np.zeros(n_out)}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, train=False, rng=None):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad):
        self.grads["W"] += self._x.T @ grad
        self.grads["b"] += grad.sum(axis=0)
        return grad @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return grad * self._mask


class Dropout(Layer):
    """Inverted dropout: active only in training, identity when keep >= 1."""

    def __init__(self, keep: float):
        super().__init__()
        if not 0 < keep <= 1:
            raise ShapeError(f"dropout keep probability must be in (0, 1], got {keep}")
        self.keep = keep

    def forward(self, x, train=False, rng=None):
        if not train or self.keep >= 1.0:
            self._mask = None
            return x
        if rng is None:
            raise ShapeError("training-mode dropout needs an rng")
        self._mask = (rng.random(x.shape) < self.keep) / self.keep
        return x * self._mask

    def backward(self, grad):
        return grad if self._mask is None else grad * self._mask


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Conv2D(Layer):
    """Same-padded stride-1 2D convolution, (B, C_in, H, W) -> (B, C_out, H, W)."""

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator):
        super().__init__()
        if k % 2 != 1:
            raise ShapeError(f"filter size must be odd for same padding, got {k}")
        limit = 1.0 / np.sqrt(c_in * k * k)
        self.k = k
        self.params = {"W": rng.uniform(-limit, limit, size=(c_out, c_in, k, k)),
                       "b": np.zeros(c_out)}
        self.grads = {k_: np.zeros_like(v) for k_, v in self.params.items()}

    def forward(self, x, train=False, rng=None):
        b, c, h, w = x.shape
        k, p = self.k, self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(xp, (k, k), axis=(2, 3))  # (B, C, H, W, k, k)
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * h * w, c * k * k)
        wmat = self.params["W"].reshape(self.params["W"].shape[0], -1)
        out = cols @ wmat.T + self.params["b"]
        self._cache = (cols, x.shape)
        return out.reshape(b, h, w, -1).transpose(0, 3, 1, 2)

    def backward(self, grad):
        cols, (b, c, h, w) = self._cache
        k, p = self.k, self.k // 2
        gflat = grad.transpose(0, 2, 3, 1).reshape(b * h * w, -1)
        wmat = self.params["W"].reshape(self.params["W"].shape[0], -1)
        self.grads["W"] += (gflat.T @ cols).reshape(self.params["W"].shape)
        self.grads["b"] += gflat.sum(axis=0)
        dcols = (gflat @ wmat).reshape(b, h, w, c, k, k)
        dxp = np.zeros((b, c, h + 2 * p, w + 2 * p))
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + h, j:j + w] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + h, p:p + w]


class MaxPool2D(Layer):
    """2x2 max pooling, stride 2; trailing odd rows/columns are dropped."""

    def forward(self, x, train=False, rng=None):
        b, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        xc = x[:, :, :h2 * 2, :w2 * 2]
        win = xc.reshape(b, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h2, w2, 4)
        self._arg = win.argmax(axis=-1)
        self._shape = x.shape
        return np.take_along_axis(win, self._arg[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        b, c, h, w = self._shape
        h2, w2 = h // 2, w // 2
        dwin = np.zeros((b, c, h2, w2, 4))
        np.put_along_axis(dwin, self._arg[..., None], grad[..., None], axis=-1)
        dx = np.zeros((b, c, h, w))
        dx[:, :, :h2 * 2, :w2 * 2] = (
            dwin.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h2 * 2, w2 * 2))
        return dx


class Conv1D(Layer):
    """Same-padded stride-1 1D convolution, (B, C_in, L) -> (B, C_out, L)."""

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator):
        super().__init__()
        if k % 2 != 1:
            raise ShapeError(f"filter size must be odd for same padding, got {k}")
        limit = 1.0 / np.sqrt(c_in * k)
        self.k = k
        self.params = {"W": rng.uniform(-limit, limit, size=(c_out, c_in, k)),
                       "b": np.zeros(c_out)}
        self.grads = {k_: np.zeros_like(v) for k_, v in self.params.items()}

    def forward(self, x, train=False, rng=None):
        b, c, n = x.shape
        k, p = self.k, self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p)))
        win = sliding_window_view(xp, k, axis=2)  # (B, C, L, k)
        cols = win.transpose(0, 2, 1, 3).reshape(b * n, c * k)
        wmat = self.params["W"].reshape(self.params["W"].shape[0], -1)
        out = cols @ wmat.T + self.params["b"]
        self._cache = (cols, x.shape)
        return out.reshape(b, n, -1).transpose(0, 2, 1)

    def backward(self, grad):
        cols, (b, c, n) = self._cache
        k, p = self.k, self.k // 2
        gflat = grad.transpose(0, 2, 1).reshape(b * n, -1)
        wmat = self.params["W"].reshape(self.params["W"].shape[0], -1)
        self.grads["W"] += (gflat.T @ cols).reshape(self.params["W"].shape)
        self.grads["b"] += gflat.sum(axis=0)
        dcols = (gflat @ wmat).reshape(b, n, c, k)
        dxp = np.zeros((b, c, n + 2 * p))
        for i in range(k):
            dxp[:, :, i:i + n] += dcols[:, :, :, i].transpose(0, 2, 1)
        return dxp[:, :, p:p + n]


class MaxPool1D(Layer):
    def forward(self, x, train=False, rng=None):
        b, c, n = x.shape
        n2 = n // 2
        win = x[:, :, :n2 * 2].reshape(b, c, n2, 2)
        self._arg = win.argmax(axis=-1)
        self._shape = x.shape
        return np.take_along_axis(win, self._arg[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        b, c, n = self._shape
        n2 = n // 2
        dwin = np.zeros((b, c, n2, 2))
        np.put_along_axis(dwin, self._arg[..., None], grad[..., None], axis=-1)
        dx = np.zeros((b, c, n))
        dx[:, :, :n2 * 2] = dwin.reshape(b, c, n2 * 2)
        return dx


class LastStep(Layer):
    """Picks the final timestep of a sequence: (B, T, H) -> (B, H)."""

    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x[:, -1]

    def backward(self, grad):
        dx = np.zeros(self._shape)
        dx[:, -1] = grad
        return dx


class TimeDistributed(Layer):
    """Applies an inner layer stack to every timestep with shared weights.

    Input (B, T, ...) is folded to (B*T, ...) for the inner layers and
    unfolded afterwards; used by the recurrent-convolutional hybrid.
    """

    def __init__(self, inner: list[Layer]):
        super().__init__()
        self.inner = inner

    def forward(self, x, train=False, rng=None):
        b, t = x.shape[:2]
        self._bt = (b, t)
        y = x.reshape(b * t, *x.shape[2:])
        for layer in self.inner:
            y = layer.forward(y, train=train, rng=rng)
        return y.reshape(b, t, *y.shape[1:])

    def backward(self, grad):
        b, t = self._bt
        g = grad.reshape(b * t, *grad.shape[2:])
        for layer in reversed(self.inner):
            g = layer.backward(g)
        return g.reshape(b, t, *g.shape[1:])

    def zero_grads(self):
        for layer in self.inner:
            layer.zero_grads()

    def named_params(self, prefix):
        out = []
        for i, layer in enumerate(self.inner):
            if isinstance(layer, TimeDistributed):
                out.extend(layer.named_params(f"{prefix}.{i}"))
            else:
                for name in layer.params:
                    out.append((f"{prefix}.{i}.{name}", layer.params[name], layer.grads[name]))
        return out
