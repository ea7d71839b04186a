"""Minimal reverse-mode tape over numpy arrays.

Only the handful of operations the in-painting network needs. Gradient
accumulation order is fixed by graph construction order, so backward passes
are deterministic.
"""
from __future__ import annotations

import numpy as np


class Node:
    """A value in the computation graph. parents holds (node, vjp) pairs where
    vjp maps the output gradient to that parent's gradient contribution."""

    __slots__ = ("value", "grad", "parents")

    def __init__(self, value, parents=()):
        self.value = value
        self.grad = None
        self.parents = tuple(parents)


def constant(value) -> Node:
    return Node(np.asarray(value))


def backward(root: Node, seed=None) -> None:
    """Accumulate gradients of root into every reachable node's .grad."""
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    for node in order:
        node.grad = None
    root.grad = np.ones_like(root.value) if seed is None else seed
    for node in reversed(order):
        if node.grad is None:
            continue
        for parent, vjp in node.parents:
            g = vjp(node.grad)
            parent.grad = g if parent.grad is None else parent.grad + g


def leaky_relu(x: Node, slope: float = 0.1) -> Node:
    gate = np.where(x.value > 0, 1.0, slope)
    return Node(x.value * gate, [(x, lambda g, gate=gate: g * gate)])


def softplus(x: Node) -> Node:
    out = np.logaddexp(0.0, x.value)
    with np.errstate(over="ignore"):
        sig = np.where(x.value >= 0,
                       1.0 / (1.0 + np.exp(-np.abs(x.value))),
                       np.exp(-np.abs(x.value)) / (1.0 + np.exp(-np.abs(x.value))))
    return Node(out, [(x, lambda g, sig=sig: g * sig)])


def avgpool_time(x: Node) -> Node:
    """Halve the last axis by averaging adjacent pairs. Length must be even."""
    v = x.value
    if v.shape[-1] % 2:
        raise ValueError("time axis must be even for pooling")
    out = 0.5 * (v[..., ::2] + v[..., 1::2])

    def vjp(g):
        gx = np.empty_like(v)
        gx[..., ::2] = 0.5 * g
        gx[..., 1::2] = 0.5 * g
        return gx

    return Node(out, [(x, vjp)])


def upsample_time(x: Node) -> Node:
    """Nearest-neighbor doubling of the last axis."""
    out = np.repeat(x.value, 2, axis=-1)
    return Node(out, [(x, lambda g: g[..., ::2] + g[..., 1::2])])


def maxpool_freq(x: Node) -> Node:
    """Halve the frequency axis (axis -2) by max; ablation only.
    Gradient routes to the first element on ties."""
    v = x.value
    if v.shape[-2] % 2:
        raise ValueError("frequency axis must be even for pooling")
    a, b = v[..., ::2, :], v[..., 1::2, :]
    take_a = a >= b
    out = np.where(take_a, a, b)

    def vjp(g):
        gx = np.zeros_like(v)
        gx[..., ::2, :] = np.where(take_a, g, 0.0)
        gx[..., 1::2, :] = np.where(take_a, 0.0, g)
        return gx

    return Node(out, [(x, vjp)])


def upsample_freq(x: Node) -> Node:
    out = np.repeat(x.value, 2, axis=-2)
    return Node(out, [(x, lambda g: g[..., ::2, :] + g[..., 1::2, :])])


def concat_channels(a: Node, b: Node) -> Node:
    na = a.value.shape[0]
    out = np.concatenate([a.value, b.value], axis=0)
    return Node(out, [(a, lambda g: g[:na]), (b, lambda g: g[na:])])


def pad_time(x: Node, extra: int) -> Node:
    """Zero-pad the last axis on the right."""
    if extra == 0:
        return x
    width = [(0, 0)] * (x.value.ndim - 1) + [(0, extra)]
    out = np.pad(x.value, width)
    n = x.value.shape[-1]
    return Node(out, [(x, lambda g: g[..., :n])])


def crop_time(x: Node, n: int) -> Node:
    if n == x.value.shape[-1]:
        return x
    extra = x.value.shape[-1] - n

    def vjp(g):
        width = [(0, 0)] * (g.ndim - 1) + [(0, extra)]
        return np.pad(g, width)

    return Node(x.value[..., :n], [(x, vjp)])


def masked_sse(out: Node, target: np.ndarray, mask: np.ndarray) -> Node:
    """sum((mask * (out - target))**2); the mask multiplies the residual, so
    concealed cells contribute exactly zero to both the loss and gradients."""
    resid = mask * (out.value - target)
    loss = np.array(np.sum(resid * resid))
    return Node(loss, [(out, lambda g: g * 2.0 * mask * resid)])
