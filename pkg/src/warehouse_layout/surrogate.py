"""Fitness approximation network with an auxiliary heatmap head.

A shared trunk maps the one-hot layout to a 16-channel feature map (two dense
layers, the second reshaped to the warehouse grid, then a 3x3 transposed
convolution). A heatmap head (one 3x3 transposed convolution, one channel)
and a reward head (dense 256 -> 128 -> 1) sit on top. Hidden layers use ReLU,
both heads are linear, and the loss is ``MSE(reward) + lam * MSE(heatmap)``.

Forward and backward passes are written out by hand with numpy; training is
plain SGD with momentum on mini-batches drawn from the simulated samples.

Targets are normalized before training: rewards are standardized with the
mean/std of the sample set, heatmaps are divided by ``n_r * T`` and multiplied
by ``heat_scale`` (default ``h * w``, so an evenly spread heatmap is all ones).
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .domain import Layout, WarehouseConfig, encode_layout, encode_many

FORMAT_MAGIC = b"WLSM"
FORMAT_VERSION = 1

DEFAULT_LR = 1e-2
DEFAULT_MOMENTUM = 0.9

PARAM_ORDER = ("W1", "b1", "W2", "b2", "K1", "c1", "K2", "c2", "W3", "b3", "W4", "b4", "W5", "b5")


class ShapeError(ValueError):
    pass


@dataclass
class TrainingSample:
    x: np.ndarray
    g: float
    i: np.ndarray


@dataclass
class SampleSet:
    """Raw simulation samples collected during a run (unnormalized)."""

    n_features: int
    h: int
    w: int
    xs: list[np.ndarray] = field(default_factory=list)
    gs: list[float] = field(default_factory=list)
    heats: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_config(cls, cfg: WarehouseConfig) -> "SampleSet":
        return cls(cfg.n_h * cfg.n_d, cfg.h, cfg.w)

    def __len__(self) -> int:
        return len(self.gs)

    def add(self, x: np.ndarray, reward: float, heatmap: np.ndarray) -> None:
        self.xs.append(np.asarray(x, dtype=float))
        self.gs.append(float(reward))
        self.heats.append(np.asarray(heatmap, dtype=float))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.array(self.xs), np.array(self.gs), np.array(self.heats)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _patches(x: np.ndarray, k: int) -> np.ndarray:
    """(B, h, w, C) channel-last map -> (B*h*w, k*k*C) zero-padded windows."""
    B, h, w, C = x.shape
    pad = (k - 1) // 2
    xp = np.zeros((B, h + 2 * pad, w + 2 * pad, C), dtype=x.dtype)
    xp[:, pad : pad + h, pad : pad + w, :] = x
    win = sliding_window_view(xp, (k, k), axis=(1, 2))  # (B, h, w, C, k, k)
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(B * h * w, k * k * C)


def tconv_forward(inp: np.ndarray, K: np.ndarray, bias: np.ndarray, keep: dict | None = None) -> np.ndarray:
    """Stride-1 transposed convolution with size-preserving padding.

    ``inp`` is (B, C, h, w), ``K`` is (C, O, k, k); returns (B, O, h, w).
    Output cell y receives ``inp[y + pad - ky] * K[ky]``, which is a plain
    correlation of the padded input with the spatially flipped kernel.
    If ``keep`` is given the window matrix is stored there for the backward pass.
    """
    B, C, h, w = inp.shape
    _, O, k, _ = K.shape
    cols = _patches(inp.transpose(0, 2, 3, 1), k)
    if keep is not None:
        keep["cols"] = cols
    kern = K[:, :, ::-1, ::-1].transpose(2, 3, 0, 1).reshape(k * k * C, O)
    out = (cols @ kern + bias).reshape(B, h, w, O)
    return out.transpose(0, 3, 1, 2)


def tconv_backward(inp: np.ndarray, K: np.ndarray, gout: np.ndarray,
                   cols: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (d_inp, d_K, d_bias) for ``tconv_forward``."""
    B, C, h, w = inp.shape
    _, O, k, _ = K.shape
    g_last = gout.transpose(0, 2, 3, 1)
    if cols is None:
        cols = _patches(inp.transpose(0, 2, 3, 1), k)
    dkern = cols.T @ g_last.reshape(-1, O)  # (k*k*C, O), flipped layout
    dK = dkern.reshape(k, k, C, O).transpose(2, 3, 0, 1)[:, :, ::-1, ::-1]
    # adjoint: d_inp[y'] = sum_ky gout[y' + ky - pad] * K[ky]
    gcols = _patches(g_last, k)
    kern_t = K.transpose(2, 3, 1, 0).reshape(k * k * O, C)
    d_in = (gcols @ kern_t).reshape(B, h, w, C)
    d_bias = gout.sum(axis=(0, 2, 3))
    return d_in.transpose(0, 3, 1, 2), np.ascontiguousarray(dK), d_bias


@dataclass
class SurrogateModel:
    h: int
    w: int
    n_features: int
    params: dict[str, np.ndarray]
    lam: float = 1.0
    heat_scale: float = 1.0
    heat_norm: float = 1.0
    g_mean: float = 0.0
    g_std: float = 1.0
    velocity: dict[str, np.ndarray] = field(default_factory=dict)
    updates: int = 0
    predictions: int = 0

    @property
    def dtype(self) -> np.dtype:
        return self.params["W1"].dtype

    @property
    def channels(self) -> int:
        return self.params["K1"].shape[1]

    def copy(self) -> "SurrogateModel":
        return SurrogateModel(
            h=self.h,
            w=self.w,
            n_features=self.n_features,
            params={k: v.copy() for k, v in self.params.items()},
            lam=self.lam,
            heat_scale=self.heat_scale,
            heat_norm=self.heat_norm,
            g_mean=self.g_mean,
            g_std=self.g_std,
            velocity={k: v.copy() for k, v in self.velocity.items()},
            updates=self.updates,
            predictions=self.predictions,
        )

    # -- forward / backward -------------------------------------------------

    def _forward(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
        P = self.params
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (batch, {self.n_features}) input, got {X.shape}")
        X = X.astype(self.dtype, copy=False)
        B = X.shape[0]
        z1 = X @ P["W1"] + P["b1"]
        a1 = relu(z1)
        z2 = a1 @ P["W2"] + P["b2"]
        a2 = relu(z2)
        m = a2.reshape(B, 1, self.h, self.w)
        k1: dict = {}
        k2: dict = {}
        z3 = tconv_forward(m, P["K1"], P["c1"], k1)
        a3 = relu(z3)
        heat = tconv_forward(a3, P["K2"], P["c2"], k2)[:, 0]
        f = a3.reshape(B, -1)
        z4 = f @ P["W3"] + P["b3"]
        a4 = relu(z4)
        z5 = a4 @ P["W4"] + P["b4"]
        a5 = relu(z5)
        g = (a5 @ P["W5"] + P["b5"])[:, 0]
        cache = dict(X=X, z1=z1, a1=a1, z2=z2, m=m, z3=z3, a3=a3, f=f, z4=z4, a4=a4, z5=z5, a5=a5,
                     cols1=k1["cols"], cols2=k2["cols"])
        return heat, g, cache

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray | float]:
        """Normalized (heatmap, reward) predictions for one encoding or a batch."""
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        heat, g, _ = self._forward(X[None] if single else X)
        if single:
            return heat[0], float(g[0])
        return heat, g

    def batch_loss(self, X: np.ndarray, G: np.ndarray, I: np.ndarray) -> float:
        heat, g, _ = self._forward(X)
        return float(np.mean((g - G) ** 2) + self.lam * np.mean((heat - I) ** 2))

    def gradients(self, X: np.ndarray, G: np.ndarray, I: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """Mean batch loss and its exact gradient with respect to every parameter."""
        P = self.params
        heat, g, c = self._forward(X)
        G = np.asarray(G, dtype=self.dtype)
        I = np.asarray(I, dtype=self.dtype)
        B = X.shape[0]
        hw = self.h * self.w
        loss = float(np.mean((g - G) ** 2) + self.lam * np.mean((heat - I) ** 2))

        grads: dict[str, np.ndarray] = {}
        dg = (2.0 / B) * (g - G)[:, None]
        dheat = (2.0 * self.lam / (B * hw)) * (heat - I)

        # reward head
        grads["W5"] = c["a5"].T @ dg
        grads["b5"] = dg.sum(axis=0)
        dz5 = (dg @ P["W5"].T) * (c["z5"] > 0)
        grads["W4"] = c["a4"].T @ dz5
        grads["b4"] = dz5.sum(axis=0)
        dz4 = (dz5 @ P["W4"].T) * (c["z4"] > 0)
        grads["W3"] = c["f"].T @ dz4
        grads["b3"] = dz4.sum(axis=0)
        da3 = (dz4 @ P["W3"].T).reshape(c["a3"].shape)

        # heatmap head
        da3_h, grads["K2"], grads["c2"] = tconv_backward(c["a3"], P["K2"], dheat[:, None], c["cols2"])
        da3 = da3 + da3_h

        # shared trunk
        dz3 = da3 * (c["z3"] > 0)
        dm, grads["K1"], grads["c1"] = tconv_backward(c["m"], P["K1"], dz3, c["cols1"])
        dz2 = dm.reshape(B, hw) * (c["z2"] > 0)
        grads["W2"] = c["a1"].T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        dz1 = (dz2 @ P["W2"].T) * (c["z1"] > 0)
        grads["W1"] = c["X"].T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        return loss, grads

    def apply_gradients(self, grads: dict[str, np.ndarray], lr: float, momentum: float) -> None:
        """SGD with momentum: ``v = momentum * v + g; p -= lr * v``.

        Runs in place; ``grads`` is used as scratch and left holding ``lr * v``.
        """
        for name, g in grads.items():
            v = self.velocity.get(name)
            if v is None:
                v = self.velocity[name] = np.zeros_like(g)
            v *= momentum
            v += g
            np.multiply(v, lr, out=g)
            self.params[name] -= g
        self.updates += 1

    # -- targets --------------------------------------------------------------

    def normalize_reward(self, g: np.ndarray | float) -> np.ndarray | float:
        return (np.asarray(g, dtype=float) - self.g_mean) / self.g_std

    def denormalize_reward(self, g: np.ndarray | float) -> np.ndarray | float:
        return np.asarray(g, dtype=float) * self.g_std + self.g_mean

    def normalize_heatmap(self, heat: np.ndarray) -> np.ndarray:
        return np.asarray(heat, dtype=float) * (self.heat_scale / self.heat_norm)

    def refresh_stats(self, samples: SampleSet) -> None:
        g = np.asarray(samples.gs)
        self.g_mean = float(g.mean())
        std = float(g.std())
        self.g_std = std if std > 1e-8 else 1.0

    def predict_many(self, layouts: Sequence[Layout], n_d: int, chunk: int = 2048) -> np.ndarray:
        out = np.empty(len(layouts))
        for start in range(0, len(layouts), chunk):
            X = encode_many(layouts[start : start + chunk], n_d)
            _, g, _ = self._forward(X)
            out[start : start + len(X)] = self.denormalize_reward(g)
        self.predictions += len(layouts)
        return out


def init_model(
    cfg: WarehouseConfig,
    seed: int,
    hidden: int = 128,
    channels: int = 16,
    head: tuple[int, int] = (256, 128),
    kernel: int = 3,
    lam: float = 1.0,
    heat_scale: float | None = None,
    dtype: type = np.float32,
) -> SurrogateModel:
    """Fresh network for ``cfg``; the second dense layer has one unit per grid cell.

    Weights are uniform in +-sqrt(6 / fan_in) (fan_in = C_in * k * k for the
    transposed convolutions); biases start at zero.
    """
    if heat_scale is None:
        heat_scale = float(cfg.h * cfg.w)
    return _init(cfg.h, cfg.w, cfg.n_h * cfg.n_d, seed, hidden, channels, head, kernel, lam,
                 heat_scale, float(cfg.n_r * cfg.T), dtype)


def _init(h, w, n_features, seed, hidden, channels, head, kernel, lam, heat_scale, heat_norm,
          dtype=np.float64) -> SurrogateModel:
    rng = np.random.default_rng(seed)
    hw = h * w

    def uni(shape, fan_in):
        lim = np.sqrt(6.0 / fan_in)
        return rng.uniform(-lim, lim, size=shape)

    params = {
        "W1": uni((n_features, hidden), n_features),
        "b1": np.zeros(hidden),
        "W2": uni((hidden, hw), hidden),
        "b2": np.zeros(hw),
        "K1": uni((1, channels, kernel, kernel), kernel * kernel),
        "c1": np.zeros(channels),
        "K2": uni((channels, 1, kernel, kernel), channels * kernel * kernel),
        "c2": np.zeros(1),
        "W3": uni((channels * hw, head[0]), channels * hw),
        "b3": np.zeros(head[0]),
        "W4": uni((head[0], head[1]), head[0]),
        "b4": np.zeros(head[1]),
        "W5": uni((head[1], 1), head[1]),
        "b5": np.zeros(1),
    }
    params = {k: v.astype(dtype) for k, v in params.items()}
    return SurrogateModel(h=h, w=w, n_features=n_features, params=params, lam=lam,
                          heat_scale=heat_scale, heat_norm=heat_norm)


def forward(model: SurrogateModel, x: np.ndarray):
    return model.forward(x)


def loss(model: SurrogateModel, sample: TrainingSample) -> float:
    return model.batch_loss(
        np.asarray(sample.x, dtype=float)[None],
        np.array([sample.g], dtype=float),
        np.asarray(sample.i, dtype=float)[None],
    )


def update(model: SurrogateModel, batch: Sequence[TrainingSample], lr: float = DEFAULT_LR,
           momentum: float = DEFAULT_MOMENTUM) -> SurrogateModel:
    if not batch:
        raise ValueError("empty batch")
    X = np.array([s.x for s in batch], dtype=float)
    G = np.array([s.g for s in batch], dtype=float)
    I = np.array([s.i for s in batch], dtype=float)
    _, grads = model.gradients(X, G, I)
    model.apply_gradients(grads, lr, momentum)
    return model


def train_online(
    model: SurrogateModel,
    samples: SampleSet,
    n_u: int,
    rng: np.random.Generator,
    lr: float = DEFAULT_LR,
    momentum: float = DEFAULT_MOMENTUM,
    batch_size: int = 32,
) -> SurrogateModel:
    """Run exactly ``n_u`` updates on mini-batches drawn uniformly from ``samples``."""
    if len(samples) == 0:
        raise ValueError("cannot train on an empty sample set")
    if n_u <= 0:
        return model
    model.refresh_stats(samples)
    X, G, I = samples.arrays()
    X = X.astype(model.dtype)
    Gn = model.normalize_reward(G).astype(model.dtype)
    In = model.normalize_heatmap(I).astype(model.dtype)
    size = min(batch_size, len(samples))
    for _ in range(n_u):
        idx = rng.choice(len(samples), size=size, replace=False)
        _, grads = model.gradients(X[idx], Gn[idx], In[idx])
        model.apply_gradients(grads, lr, momentum)
    return model


def predict_fitness(model: SurrogateModel, layout: Layout, n_d: int) -> float:
    _, g = model.forward(encode_layout(layout, n_d))
    model.predictions += 1
    return float(model.denormalize_reward(g))


# -- serialization -------------------------------------------------------------
#
# magic "WLSM" | u32 version | u32 header length | JSON header | tensors
# The JSON header lists every tensor's name and shape in storage order plus the
# scalar state; tensors follow as little-endian float64, row-major.


def save_model(model: SurrogateModel, path: str | Path) -> None:
    names = list(PARAM_ORDER)
    header = {
        "h": model.h,
        "w": model.w,
        "n_features": model.n_features,
        "lam": model.lam,
        "heat_scale": model.heat_scale,
        "heat_norm": model.heat_norm,
        "g_mean": model.g_mean,
        "g_std": model.g_std,
        "updates": model.updates,
        "dtype": np.dtype(model.dtype).name,
        "tensors": [[n, list(model.params[n].shape)] for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(FORMAT_MAGIC)
    buf.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
    buf.write(blob)
    for n in names:
        buf.write(np.ascontiguousarray(model.params[n], dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_model(path: str | Path) -> SurrogateModel:
    data = Path(path).read_bytes()
    if data[:4] != FORMAT_MAGIC:
        raise ValueError(f"{path}: not a surrogate model file")
    version, hlen = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    header = json.loads(data[12 : 12 + hlen])
    off = 12 + hlen
    params = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape))
        raw = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        params[name] = raw.reshape(shape).astype(header.get("dtype", "float64"))
        off += 8 * count
    return SurrogateModel(
        h=header["h"],
        w=header["w"],
        n_features=header["n_features"],
        params=params,
        lam=header["lam"],
        heat_scale=header["heat_scale"],
        heat_norm=header["heat_norm"],
        g_mean=header["g_mean"],
        g_std=header["g_std"],
        updates=header["updates"],
    )
