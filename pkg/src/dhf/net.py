"""Dilated harmonic convolution and the light harmonic U-Net forward pass.

A harmonic convolution's frequency neighborhood is the set of integer
multiples of the current bin (its harmonics) instead of adjacent bins; the
time neighborhood is a dilated tap pattern so each tap reads the same bin at
strided frames:

    out[w, t] = sum_k sum_dt x[k * w / anchor, t - D * dt] * K[k, dt]

summed over input channels. Harmonic indices beyond the bin range (or
non-integral when anchor > 1) and out-of-range frames contribute zero. The DC
bin is special-cased to its k=1 tap only, since every k maps bin 0 onto
itself and would otherwise count it H times.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Node


@dataclass(frozen=True)
class HarmonicKernel:
    """weights[out_ch, in_ch, H, 2T+1]; anchor=1 means forward-only harmonics."""

    weights: np.ndarray
    anchor: int = 1
    dilation: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 4:
            raise ValueError("weights must be [out_ch, in_ch, H, 2T+1]")
        if w.shape[3] % 2 != 1:
            raise ValueError("temporal tap count must be odd (2T+1)")
        if self.anchor < 1 or self.dilation < 1:
            raise ValueError("anchor and dilation must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def H(self) -> int:
        return self.weights.shape[2]

    @property
    def T(self) -> int:
        return self.weights.shape[3] // 2


@dataclass(frozen=True)
class NetConfig:
    """Harmonic U-Net hyperparameters. Frequency pooling and anchor != 1 exist
    only to ablate the spectrally accurate design."""

    channels: tuple = (8, 16, 32)
    in_channels: int = 8
    H: int = 3
    T: int = 1
    dilation: int = 1
    anchor: int = 1
    freq_pooling: bool = False
    activation: str = "leaky_relu"
    leaky_slope: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if len(self.channels) < 1:
            raise ValueError("need at least one level")
        if self.anchor != 1 and not self.freq_pooling:
            pass  # anchor is an independent ablation knob
        if self.activation not in ("leaky_relu", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def depth(self) -> int:
        return len(self.channels)


def _harmonic_rows(k: int, anchor: int, bins: int):
    """(dst_bins, src_bins) index arrays for harmonic tap k: src = k*dst/anchor
    where integral and in range. Bin 0 participates only at k=1."""
    if anchor == 1:
        m = (bins - 1) // k
        b0 = 0 if k == 1 else 1
        if m < b0:
            return None
        dst = slice(b0, m + 1)
        src = slice(b0 * k, m * k + 1, k)
        return dst, src
    b = np.arange(1 if k != 1 else 0, bins)
    num = k * b
    ok = (num % anchor == 0) & (num // anchor < bins)
    if k != 1:
        ok &= (num // anchor != 0) | (b == 0)
    dst = b[ok]
    if dst.size == 0:
        return None
    return dst, (k * dst) // anchor


def _gather(x: np.ndarray, H: int, T: int, dilation: int, anchor: int) -> np.ndarray:
    """x[C, B, F] -> stacked taps [C, H, 2T+1, B, F], zeros where out of range."""
    C, B, F = x.shape
    DT = dilation * T
    if DT:
        xp = np.zeros((C, B, F + 2 * DT), dtype=x.dtype)
        xp[:, :, DT:DT + F] = x
    else:
        xp = x
    out = np.zeros((C, H, 2 * T + 1, B, F), dtype=x.dtype)
    for k in range(1, H + 1):
        rows = _harmonic_rows(k, anchor, B)
        if rows is None:
            continue
        dst, src = rows
        xk = xp[:, src, :]
        for ti in range(2 * T + 1):
            t = ti - T
            out[:, k - 1, ti, dst, :] = xk[:, :, DT - dilation * t:DT - dilation * t + F]
    return out


def _scatter(g: np.ndarray, shape, H: int, T: int, dilation: int, anchor: int) -> np.ndarray:
    """Adjoint of _gather: g[C, H, 2T+1, B, F] -> dx[C, B, F]."""
    C, B, F = shape
    DT = dilation * T
    dxp = np.zeros((C, B, F + 2 * DT), dtype=g.dtype)
    for k in range(1, H + 1):
        rows = _harmonic_rows(k, anchor, B)
        if rows is None:
            continue
        dst, src = rows
        for ti in range(2 * T + 1):
            t = ti - T
            dxp[:, src, DT - dilation * t:DT - dilation * t + F] += g[:, k - 1, ti, dst, :]
    return dxp[:, :, DT:DT + F] if DT else dxp


def harmonic_conv(x: np.ndarray, kernel: HarmonicKernel) -> np.ndarray:
    """Plain (non-recording) dilated harmonic convolution; x is [in_ch, bins, frames]."""
    w = kernel.weights
    if x.ndim != 3 or x.shape[0] != w.shape[1]:
        raise ValueError(f"input channels {x.shape[0] if x.ndim == 3 else '?'}"
                         f" do not match kernel in_ch {w.shape[1]}")
    return _conv_raw(np.asarray(x, dtype=np.float64), w, kernel.H, kernel.T,
                     kernel.dilation, kernel.anchor)


def _conv_raw(x, w, H, T, dilation, anchor):
    C, B, F = x.shape
    O = w.shape[0]
    xg = _gather(x, H, T, dilation, anchor).reshape(C * H * (2 * T + 1), B * F)
    return (w.reshape(O, -1).astype(x.dtype) @ xg).reshape(O, B, F)


def conv_node(x: Node, w: Node, H: int, T: int, dilation: int, anchor: int) -> Node:
    C, B, F = x.value.shape
    O = w.value.shape[0]
    taps = C * H * (2 * T + 1)
    xg = _gather(x.value, H, T, dilation, anchor).reshape(taps, B * F)
    w2 = w.value.reshape(O, taps)
    out = (w2 @ xg).reshape(O, B, F)

    def vjp_x(g):
        gxg = (w2.T @ g.reshape(O, B * F)).reshape(C, H, 2 * T + 1, B, F)
        return _scatter(gxg, (C, B, F), H, T, dilation, anchor)

    def vjp_w(g):
        return (g.reshape(O, B * F) @ xg.T).reshape(w.value.shape)

    return Node(out, [(x, vjp_x), (w, vjp_w)])


class ParamStore:
    """Named weight arrays with congruent gradient slots and optimizer state."""

    def __init__(self):
        self.weights: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> None:
        self.weights[name] = np.asarray(value, dtype=np.float64)
        self.grads[name] = np.zeros_like(self.weights[name])
        self.m[name] = np.zeros_like(self.weights[name])
        self.v[name] = np.zeros_like(self.weights[name])

    def names(self):
        return list(self.weights)

    def check_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights.values())


def _layer_plan(cfg: NetConfig):
    """(name, in_ch, out_ch) for every convolution in the U-Net."""
    ch = cfg.channels
    plan = [("enc0", cfg.in_channels, ch[0])]
    for lvl in range(1, cfg.depth):
        plan.append((f"enc{lvl}", ch[lvl - 1], ch[lvl]))
    for lvl in range(cfg.depth - 2, -1, -1):
        plan.append((f"dec{lvl}", ch[lvl + 1] + ch[lvl], ch[lvl]))
    plan.append(("head", ch[0], 1))
    return plan


def init_params(cfg: NetConfig, seed: int | None = None) -> ParamStore:
    """Fan-in scaled uniform initialization, seeded for reproducibility."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    store = ParamStore()
    taps = cfg.H * (2 * cfg.T + 1)
    for name, cin, cout in _layer_plan(cfg):
        bound = 1.0 / np.sqrt(cin * taps)
        store.add(name, rng.uniform(-bound, bound, size=(cout, cin, cfg.H, 2 * cfg.T + 1)))
    return store


def make_input(cfg: NetConfig, bins: int, frames: int, seed: int | None = None) -> np.ndarray:
    """Fixed random network input z with Uniform[0, 0.1] entries.

    Each (channel, bin) row is a blend of a value shared across all frames
    and an independent per-frame draw.  Purely independent noise gives the
    network no way to produce time-coherent rows at frames where the loss is
    masked out, so in-painted regions degrade toward the output bias; the
    shared row component lets a fit that matches a bin's visible frames
    extrapolate the same response into hidden frames.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    row = rng.uniform(0.0, 0.1, size=(cfg.in_channels, bins, 1))
    jitter = rng.uniform(0.0, 0.1, size=(cfg.in_channels, bins, frames))
    return 0.9 * np.broadcast_to(row, jitter.shape) + 0.1 * jitter


def forward_nodes(cfg: NetConfig, store: ParamStore, z: np.ndarray) -> Node:
    """Recorded forward pass; returns the output node ([1, bins, frames], >= 0)."""
    if z.ndim != 3 or z.shape[0] != cfg.in_channels:
        raise ValueError("z must be [in_channels, bins, frames]")
    bins, frames = z.shape[1], z.shape[2]
    mult = 2 ** cfg.depth
    f_pad = (-frames) % mult
    act = (lambda n: ad.leaky_relu(n, cfg.leaky_slope)) if cfg.activation == "leaky_relu" \
        else (lambda n: ad.leaky_relu(n, 0.0))
    w = {name: Node(store.weights[name]) for name in store.names()}
    conv = lambda x, name: conv_node(x, w[name], cfg.H, cfg.T, cfg.dilation, cfg.anchor)

    x = ad.pad_time(Node(z), f_pad)
    skips = []
    for lvl in range(cfg.depth):
        x = act(conv(x, f"enc{lvl}"))
        if cfg.freq_pooling and x.value.shape[1] % 2 == 0 and lvl < cfg.depth - 1:
            x = ad.maxpool_freq(x)
        skips.append(x)
        if lvl < cfg.depth - 1:
            x = ad.avgpool_time(x)
    for lvl in range(cfg.depth - 2, -1, -1):
        x = ad.upsample_time(x)
        if cfg.freq_pooling and x.value.shape[1] != skips[lvl].value.shape[1]:
            x = ad.upsample_freq(x)
        x = ad.concat_channels(x, skips[lvl])
        x = act(conv(x, f"dec{lvl}"))
    if not cfg.freq_pooling:
        # spectrally accurate mode keeps the frequency size constant per layer
        assert all(s.value.shape[1] == bins for s in skips)
    x = ad.softplus(conv(x, "head"))
    out = ad.crop_time(x, frames)
    return out, w


def forward(cfg: NetConfig, store: ParamStore, z: np.ndarray) -> np.ndarray:
    """Pure forward pass: magnitude grid [1, bins, frames], nonnegative."""
    out, _ = forward_nodes(cfg, store, z)
    return out.value
