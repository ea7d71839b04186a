"""Single-sample deep-prior optimization of the harmonic U-Net against the
masked in-painting loss."""
from __future__ import annotations

from dataclasses import dataclass, field

import json

import numpy as np

from . import autodiff as ad
from .masking import BinaryMask
from .net import NetConfig, ParamStore, forward_nodes, init_params, make_input


@dataclass(frozen=True)
class TrainOptions:
    lr: float = 3e-3
    iters: int = 2000
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dtype: str = "float32"  # training precision; gradients stay exact per dtype


@dataclass
class TrainReport:
    loss_curve: np.ndarray
    iterations: int
    final_loss: float
    seed: int
    diverged: bool = False


class TrainingError(RuntimeError):
    pass


def inpaint_loss(S_out: np.ndarray, S_mixed_mag: np.ndarray, mask: BinaryMask) -> float:
    """Masked squared error: sum of (mask * (S_out - S_mixed))^2 over all cells."""
    S_out = np.asarray(S_out, dtype=np.float64)
    S_mixed_mag = np.asarray(S_mixed_mag, dtype=np.float64)
    if S_out.shape != S_mixed_mag.shape or S_out.shape != mask.shape:
        raise ValueError("grids and mask must be congruent")
    resid = mask.grid * (S_out - S_mixed_mag)
    return float(np.sum(resid * resid))


def forward_loss(cfg: NetConfig, store: ParamStore, z: np.ndarray,
                 target_mag: np.ndarray, mask: BinaryMask):
    """Recorded forward pass plus masked loss. Returns (out_node, loss_node, weight_nodes)."""
    out, w = forward_nodes(cfg, store, z)
    loss = ad.masked_sse(out, target_mag[None] if target_mag.ndim == 2 else target_mag,
                         mask.grid[None] if mask.grid.ndim == 2 else mask.grid)
    return out, loss, w


def backward(loss_node, weight_nodes, store: ParamStore) -> None:
    """Reverse-mode sweep; writes exact gradients into the store's slots."""
    if not np.isfinite(loss_node.value):
        raise TrainingError(f"non-finite loss {loss_node.value!r}")
    ad.backward(loss_node)
    for name, node in weight_nodes.items():
        g = node.grad
        store.grads[name] = np.zeros_like(store.weights[name]) if g is None else g
        if not np.all(np.isfinite(store.grads[name])):
            raise TrainingError(f"non-finite gradient in {name}")


def adam_step(store: ParamStore, opt: TrainOptions) -> None:
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - opt.beta1 ** t
    bc2 = 1.0 - opt.beta2 ** t
    for name in store.names():
        g = store.grads[name]
        store.m[name] = opt.beta1 * store.m[name] + (1 - opt.beta1) * g
        store.v[name] = opt.beta2 * store.v[name] + (1 - opt.beta2) * g * g
        m_hat = store.m[name] / bc1
        v_hat = store.v[name] / bc2
        store.weights[name] -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)


def fit_prior(cfg: NetConfig, S_mixed_mag: np.ndarray, mask: BinaryMask,
              opt: TrainOptions = TrainOptions()):
    """Adaptive-moment descent from a seeded initialization; the final network
    output is the in-painted magnitude. Returns (S_inpainted_mag, TrainReport).

    The target is normalized by the RMS of its visible magnitudes so the loss
    scale does not depend on signal amplitude (or on any concealed cell).
    Normalizing by the visible maximum instead drives most cells' targets
    toward zero and lets the nonnegative output head collapse there.
    """
    S_mixed_mag = np.asarray(S_mixed_mag, dtype=np.float64)
    if S_mixed_mag.shape != mask.shape:
        raise ValueError("grid and mask must be congruent")
    dt = np.dtype(opt.dtype)
    ss = np.random.SeedSequence(opt.seed)
    s_params, s_z = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    store = init_params(cfg, seed=s_params)
    for name in store.names():
        store.weights[name] = store.weights[name].astype(dt)
        store.m[name] = store.m[name].astype(dt)
        store.v[name] = store.v[name].astype(dt)
    bins, frames = S_mixed_mag.shape[1], S_mixed_mag.shape[0]
    z = make_input(cfg, bins, frames, seed=s_z).astype(dt)

    n_vis = float(np.sum(mask.grid))
    scale = float(np.sqrt(np.sum((mask.grid * S_mixed_mag) ** 2) / n_vis)) if n_vis else 0.0
    if scale <= 0:
        scale = 1.0
    target = (S_mixed_mag / scale).T[None].astype(dt)  # [1, bins, frames]
    mgrid = BinaryMask(mask.grid.T, bin_hz=mask.bin_hz)
    object.__setattr__(mgrid, "grid", mgrid.grid.astype(dt))

    losses = []
    out_value = None
    best_loss = float("inf")
    diverged = False
    for _ in range(opt.iters):
        out, loss, w = forward_loss(cfg, store, z, target[0], mgrid)
        try:
            backward(loss, w, store)
        except TrainingError:
            diverged = True
            break
        losses.append(float(loss.value))
        if losses[-1] < best_loss:
            best_loss = losses[-1]
            out_value = out.value.copy()
        adam_step(store, opt)
    if not diverged and losses:
        # the final weights were never evaluated inside the loop; keep them
        # only if they beat the best iterate seen (descent can destabilize
        # late, and the best-loss output is the one the loss vouches for)
        out_f, loss_f, _ = forward_loss(cfg, store, z, target[0], mgrid)
        if float(loss_f.value) < best_loss:
            best_loss = float(loss_f.value)
            out_value = out_f.value
    report = TrainReport(np.asarray(losses), len(losses),
                         best_loss if losses else float("nan"),
                         opt.seed, diverged=diverged)
    if out_value is None:
        raise TrainingError("training diverged on the first step")
    return (out_value[0].T.astype(np.float64) * scale), report


def save_checkpoint(path, store: ParamStore) -> None:
    """Named arrays as little-endian float32 after a JSON index header line."""
    index = {name: list(store.weights[name].shape) for name in store.names()}
    with open(path, "wb") as fh:
        fh.write((json.dumps(index, sort_keys=True) + "\n").encode("utf-8"))
        for name in sorted(store.names()):
            fh.write(store.weights[name].astype("<f4").tobytes())


def load_checkpoint(path) -> ParamStore:
    store = ParamStore()
    with open(path, "rb") as fh:
        index = json.loads(fh.readline().decode("utf-8"))
        for name in sorted(index):
            shape = tuple(index[name])
            n = int(np.prod(shape))
            arr = np.frombuffer(fh.read(4 * n), dtype="<f4").reshape(shape)
            store.add(name, arr.astype(np.float64))
    return store
