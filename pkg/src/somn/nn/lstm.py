"""LSTM layer with full backpropagation through time.

Gates follow the standard formulation: input/forget/output gates are
sigmoid, the candidate is tanh,

    c_t = f * c_{t-1} + i * g,    h_t = o * tanh(c_t)

with zero initial states. Weights are packed gate-major as
Wx (D, 4H), Wh (H, 4H), b (4H,) in i, f, g, o order. The forget-gate
bias starts at 1 so early training does not forget everything.
"""

from __future__ import annotations

import numpy as np

from .layers import Layer, sigmoid


class LSTM(Layer):
    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        limit = 1.0 / np.sqrt(hidden_size)
        h = hidden_size
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0
        self.params = {
            "Wx": rng.uniform(-limit, limit, size=(input_size, 4 * h)),
            "Wh": rng.uniform(-limit, limit, size=(hidden_size, 4 * h)),
            "b": b,
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x, train=False, rng=None):
        b, t, d = x.shape
        h = self.hidden_size
        if d != self.input_size:
            from ..errors import ShapeError
            raise ShapeError(f"LSTM expected input size {self.input_size}, got {d}")
        wx, wh, bias = self.params["Wx"], self.params["Wh"], self.params["b"]
        h_t = np.zeros((b, h))
        c_t = np.zeros((b, h))
        hs = np.empty((b, t, h))
        self._steps = []
        for step in range(t):
            x_t = x[:, step]
            z = x_t @ wx + h_t @ wh + bias
            gi = sigmoid(z[:, :h])
            gf = sigmoid(z[:, h:2 * h])
            gg = np.tanh(z[:, 2 * h:3 * h])
            go = sigmoid(z[:, 3 * h:])
            c_new = gf * c_t + gi * gg
            tc = np.tanh(c_new)
            self._steps.append((x_t, h_t, c_t, gi, gf, gg, go, tc))
            c_t = c_new
            h_t = go * tc
            hs[:, step] = h_t
        return hs

    def backward(self, grad):
        b, t, h = grad.shape
        wx, wh = self.params["Wx"], self.params["Wh"]
        dx = np.empty((b, t, self.input_size))
        dh_next = np.zeros((b, h))
        dc_next = np.zeros((b, h))
        for step in range(t - 1, -1, -1):
            x_t, h_prev, c_prev, gi, gf, gg, go, tc = self._steps[step]
            dh = grad[:, step] + dh_next
            do = dh * tc
            dc = dc_next + dh * go * (1.0 - tc * tc)
            di = dc * gg
            df = dc * c_prev
            dg = dc * gi
            dc_next = dc * gf
            dz = np.concatenate([
                di * gi * (1.0 - gi),
                df * gf * (1.0 - gf),
                dg * (1.0 - gg * gg),
                do * go * (1.0 - go),
            ], axis=1)
            self.grads["Wx"] += x_t.T @ dz
            self.grads["Wh"] += h_prev.T @ dz
            self.grads["b"] += dz.sum(axis=0)
            dx[:, step] = dz @ wx.T
            dh_next = dz @ wh.T
        return dx
