"""Recurrent and convolutional building blocks with hand-written backprop.

Everything runs in float64 numpy. Layers own their parameters and gradient
buffers; ``forward`` returns the full output sequence plus a cache, and
``backward`` consumes the gradient w.r.t. that sequence, accumulates
parameter gradients and returns the gradient w.r.t. the input sequence.
Shapes are batch-first: (batch, time, features).
"""

from __future__ import annotations

import numpy as np

from ..errors import GranucastError


class DimensionMismatch(GranucastError):
    pass


class SequenceTooShort(GranucastError):
    pass


def sigmoid(z: np.ndarray) -> np.ndarray:
    # evaluated piecewise so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Layer:
    """Common parameter/gradient bookkeeping."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def _register(self, name: str, shape: tuple[int, ...]):
        self.params[name] = np.zeros(shape, dtype=np.float64)
        self.grads[name] = np.zeros(shape, dtype=np.float64)

    def init_weights(self, rng: np.random.Generator, scale: float = 0.08):
        """Uniform(-scale, scale) weights; bias vectors stay zero."""
        for name, value in self.params.items():
            if not name.rsplit("_", 1)[-1].startswith("b"):
                value[...] = rng.uniform(-scale, scale, size=value.shape)

    def zero_grads(self):
        for g in self.grads.values():
            g[...] = 0.0


class LSTMLayer(Layer):
    """Single-direction LSTM; gate order within fused weights is (i, f, o, g)."""

    def __init__(self, in_dim: int, hidden: int):
        super().__init__()
        self.in_dim = in_dim
        self.hidden = hidden
        self._register("wx", (in_dim, 4 * hidden))
        self._register("wh", (hidden, 4 * hidden))
        self._register("b", (4 * hidden,))

    def forward(self, x: np.ndarray):
        if x.shape[2] != self.in_dim:
            raise DimensionMismatch(f"expected input width {self.in_dim}, got {x.shape[2]}")
        batch, steps, _ = x.shape
        hdim = self.hidden
        wx, wh, b = self.params["wx"], self.params["wh"], self.params["b"]
        h = np.zeros((batch, hdim))
        c = np.zeros((batch, hdim))
        h_seq = np.empty((batch, steps, hdim))
        cache = []
        for t in range(steps):
            a = x[:, t, :] @ wx + h @ wh + b
            i = sigmoid(a[:, :hdim])
            f = sigmoid(a[:, hdim : 2 * hdim])
            o = sigmoid(a[:, 2 * hdim : 3 * hdim])
            g = np.tanh(a[:, 3 * hdim :])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            cache.append((x[:, t, :], h, c, i, f, o, g, tanh_c))
            h, c = h_new, c_new
            h_seq[:, t, :] = h
        return h_seq, cache

    def backward(self, d_h_seq: np.ndarray, cache) -> np.ndarray:
        batch, steps, _ = d_h_seq.shape
        hdim = self.hidden
        wx, wh = self.params["wx"], self.params["wh"]
        dx = np.empty((batch, steps, self.in_dim))
        dh_next = np.zeros((batch, hdim))
        dc_next = np.zeros((batch, hdim))
        for t in reversed(range(steps)):
            x_t, h_prev, c_prev, i, f, o, g, tanh_c = cache[t]
            dh = d_h_seq[:, t, :] + dh_next
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c**2)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            da = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    do * o * (1.0 - o),
                    dg * (1.0 - g**2),
                ],
                axis=1,
            )
            self.grads["wx"] += x_t.T @ da
            self.grads["wh"] += h_prev.T @ da
            self.grads["b"] += da.sum(axis=0)
            dx[:, t, :] = da @ wx.T
            dh_next = da @ wh.T
        return dx


class BiLSTMLayer(Layer):
    """Two LSTMs run over the sequence in opposite directions.

    Output at step t is the forward state at t concatenated with the
    backward state at t, so the final forward state sits at the last step
    and the final backward state at the first.
    """

    def __init__(self, in_dim: int, hidden: int):
        super().__init__()
        self.in_dim = in_dim
        self.hidden = hidden
        self.fwd = LSTMLayer(in_dim, hidden)
        self.bwd = LSTMLayer(in_dim, hidden)
        for name in self.fwd.params:
            self.params[f"fwd_{name}"] = self.fwd.params[name]
            self.grads[f"fwd_{name}"] = self.fwd.grads[name]
            self.params[f"bwd_{name}"] = self.bwd.params[name]
            self.grads[f"bwd_{name}"] = self.bwd.grads[name]

    def zero_grads(self):
        self.fwd.zero_grads()
        self.bwd.zero_grads()
        # shared buffers: self.grads aliases the direction dicts

    def forward(self, x: np.ndarray):
        h_fwd, cache_f = self.fwd.forward(x)
        h_bwd_rev, cache_b = self.bwd.forward(x[:, ::-1, :])
        h_bwd = h_bwd_rev[:, ::-1, :]
        return np.concatenate([h_fwd, h_bwd], axis=2), (cache_f, cache_b)

    def backward(self, d_h_seq: np.ndarray, cache) -> np.ndarray:
        cache_f, cache_b = cache
        hdim = self.hidden
        dx_f = self.fwd.backward(d_h_seq[:, :, :hdim], cache_f)
        dx_b_rev = self.bwd.backward(d_h_seq[:, ::-1, hdim:], cache_b)
        return dx_f + dx_b_rev[:, ::-1, :]


class GRULayer(Layer):
    """GRU with the update gate blending old state against the candidate.

    State recursion: h = (1 - u) * h_prev + u * cand where
    u = sigmoid(update gate), cand = tanh over (reset-scaled h_prev, x).
    """

    def __init__(self, in_dim: int, hidden: int):
        super().__init__()
        self.in_dim = in_dim
        self.hidden = hidden
        for gate in ("u", "r", "c"):
            self._register(f"w{gate}x", (in_dim, hidden))
            self._register(f"w{gate}h", (hidden, hidden))
            self._register(f"b{gate}", (hidden,))

    def step(self, h_prev: np.ndarray, x_t: np.ndarray):
        """One cell application; returns the new state and a step cache."""
        p = self.params
        u = sigmoid(h_prev @ p["wuh"] + x_t @ p["wux"] + p["bu"])
        r = sigmoid(h_prev @ p["wrh"] + x_t @ p["wrx"] + p["br"])
        hr = r * h_prev
        cand = np.tanh(hr @ p["wch"] + x_t @ p["wcx"] + p["bc"])
        h = (1.0 - u) * h_prev + u * cand
        return h, (x_t, h_prev, u, r, hr, cand)

    def forward(self, x: np.ndarray):
        if x.shape[2] != self.in_dim:
            raise DimensionMismatch(f"expected input width {self.in_dim}, got {x.shape[2]}")
        batch, steps, _ = x.shape
        h = np.zeros((batch, self.hidden))
        h_seq = np.empty((batch, steps, self.hidden))
        cache = []
        for t in range(steps):
            h, step_cache = self.step(h, x[:, t, :])
            cache.append(step_cache)
            h_seq[:, t, :] = h
        return h_seq, cache

    def backward(self, d_h_seq: np.ndarray, cache) -> np.ndarray:
        batch, steps, _ = d_h_seq.shape
        p, g = self.params, self.grads
        dx = np.empty((batch, steps, self.in_dim))
        dh_next = np.zeros((batch, self.hidden))
        for t in reversed(range(steps)):
            x_t, h_prev, u, r, hr, cand = cache[t]
            dh = d_h_seq[:, t, :] + dh_next
            du = dh * (cand - h_prev)
            dcand = dh * u
            dh_prev = dh * (1.0 - u)
            dcin = dcand * (1.0 - cand**2)
            g["wch"] += hr.T @ dcin
            g["wcx"] += x_t.T @ dcin
            g["bc"] += dcin.sum(axis=0)
            dhr = dcin @ p["wch"].T
            dx_t = dcin @ p["wcx"].T
            dr = dhr * h_prev
            dh_prev += dhr * r
            drin = dr * r * (1.0 - r)
            g["wrh"] += h_prev.T @ drin
            g["wrx"] += x_t.T @ drin
            g["br"] += drin.sum(axis=0)
            dh_prev += drin @ p["wrh"].T
            dx_t += drin @ p["wrx"].T
            duin = du * u * (1.0 - u)
            g["wuh"] += h_prev.T @ duin
            g["wux"] += x_t.T @ duin
            g["bu"] += duin.sum(axis=0)
            dh_prev += duin @ p["wuh"].T
            dx_t += duin @ p["wux"].T
            dx[:, t, :] = dx_t
            dh_next = dh_prev
        return dx


class Conv1dLayer(Layer):
    """Valid (no padding) 1-D convolution over time, tanh nonlinearity."""

    def __init__(self, in_dim: int, channels: int, kernel: int = 3):
        super().__init__()
        self.in_dim = in_dim
        self.channels = channels
        self.kernel = kernel
        self._register("k", (kernel, in_dim, channels))
        self._register("b", (channels,))

    def forward(self, x: np.ndarray):
        batch, steps, width = x.shape
        if width != self.in_dim:
            raise DimensionMismatch(f"expected input width {self.in_dim}, got {width}")
        if steps < self.kernel:
            raise SequenceTooShort(f"sequence length {steps} < kernel size {self.kernel}")
        out_steps = steps - self.kernel + 1
        # (batch, out_steps, kernel*in_dim) view of the sliding windows
        windows = np.stack([x[:, tau : tau + out_steps, :] for tau in range(self.kernel)], axis=2)
        flat = windows.reshape(batch, out_steps, self.kernel * self.in_dim)
        pre = flat @ self.params["k"].reshape(-1, self.channels) + self.params["b"]
        out = np.tanh(pre)
        return out, (flat, out, steps)

    def backward(self, d_out: np.ndarray, cache) -> np.ndarray:
        flat, out, steps = cache
        batch, out_steps, _ = d_out.shape
        dpre = d_out * (1.0 - out**2)
        kmat = self.params["k"].reshape(-1, self.channels)
        self.grads["k"] += (
            flat.reshape(-1, kmat.shape[0]).T @ dpre.reshape(-1, self.channels)
        ).reshape(self.params["k"].shape)
        self.grads["b"] += dpre.sum(axis=(0, 1))
        dflat = dpre @ kmat.T
        dwindows = dflat.reshape(batch, out_steps, self.kernel, self.in_dim)
        dx = np.zeros((batch, steps, self.in_dim))
        for tau in range(self.kernel):
            dx[:, tau : tau + out_steps, :] += dwindows[:, :, tau, :]
        return dx


class DenseHead(Layer):
    """Affine map from a feature vector to a scalar prediction."""

    def __init__(self, in_dim: int):
        super().__init__()
        self.in_dim = in_dim
        self._register("w", (in_dim,))
        self._register("b", ())

    def forward(self, feat: np.ndarray):
        if feat.shape[1] != self.in_dim:
            raise DimensionMismatch(f"expected feature width {self.in_dim}, got {feat.shape[1]}")
        return feat @ self.params["w"] + self.params["b"], feat

    def backward(self, d_pred: np.ndarray, feat: np.ndarray) -> np.ndarray:
        self.grads["w"] += feat.T @ d_pred
        self.grads["b"] += d_pred.sum()
        return np.outer(d_pred, self.params["w"])


def clip_gradients(layers, max_norm: float):
    """Scale all gradients in place so their global L2 norm is <= max_norm."""
    total = 0.0
    for layer in layers:
        for g in layer.grads.values():
            total += float((g**2).sum())
    norm = np.sqrt(total)
    if norm > max_norm:
        factor = max_norm / norm
        for layer in layers:
            for g in layer.grads.values():
                g *= factor
    return norm
