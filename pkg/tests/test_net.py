"""Harmonic convolution against a direct triple-loop oracle, network forward
shapes, and finite-difference gradient checks through the whole net."""
import numpy as np
import pytest

from dhf import autodiff as ad
from dhf.masking import BinaryMask
from dhf.net import (HarmonicKernel, NetConfig, conv_node, forward, forward_nodes,
                     harmonic_conv, init_params, make_input)
from dhf.train import forward_loss


def oracle_harmonic_conv(x, kernel):
    """Direct evaluation: out[o, w, t] = sum over c, k, tau of
    x[c, (k*w)/anchor, t - D*tau] * K[o, c, k, tau], with out-of-range or
    non-integral harmonic rows contributing zero. The DC row uses only k=1."""
    O, C, H, W = kernel.weights.shape
    T = (W - 1) // 2
    _, bins, frames = x.shape
    out = np.zeros((O, bins, frames))
    for o in range(O):
        for w in range(bins):
            for t in range(frames):
                acc = 0.0
                for c in range(C):
                    for ki, k in enumerate(range(1, H + 1)):
                        if w == 0 and k != 1:
                            continue  # DC maps to itself for every k
                        num = k * w
                        if num % kernel.anchor:
                            continue
                        b = num // kernel.anchor
                        if b >= bins:
                            continue
                        for ti, tau in enumerate(range(-T, T + 1)):
                            tt = t - kernel.dilation * tau
                            if 0 <= tt < frames:
                                acc += x[c, b, tt] * kernel.weights[o, c, ki, ti]
                out[o, w, t] = acc
    return out


def _int_case(rng, bins, frames):
    C = int(rng.integers(1, 3))
    O = int(rng.integers(1, 3))
    H = int(rng.integers(1, 5))
    T = int(rng.integers(0, 3))
    D = int(rng.choice([1, 3, 13]))
    anchor = int(rng.choice([1, 2, 3]))
    x = rng.integers(-4, 5, size=(C, bins, frames)).astype(np.float64)
    w = rng.integers(-4, 5, size=(O, C, H, 2 * T + 1)).astype(np.float64)
    return x, HarmonicKernel(w, anchor=anchor, dilation=D)


class TestHarmonicConvOracle:
    def test_matches_triple_loop_exactly(self):
        # integer inputs make every sum exact in float64, so the comparison
        # can demand equality rather than a tolerance
        rng = np.random.default_rng(2024)
        for _ in range(30):
            bins = int(rng.integers(4, 17))
            frames = int(rng.integers(4, 17))
            x, kernel = _int_case(rng, bins, frames)
            got = harmonic_conv(x, kernel)
            want = oracle_harmonic_conv(x, kernel)
            assert np.max(np.abs(got - want)) == 0.0

    def test_single_tap_identity(self):
        # H=1, T=0, weight 1: output bin w reads input bin w unchanged
        x = np.arange(12.0).reshape(1, 3, 4)
        k = HarmonicKernel(np.ones((1, 1, 1, 1)), anchor=1, dilation=1)
        assert np.array_equal(harmonic_conv(x, k), x)

    def test_second_harmonic_reads_doubled_bin(self):
        # only k=2 active: out[w] = x[2w] where it exists, else 0 (DC exempt)
        x = np.zeros((1, 6, 1))
        x[0, :, 0] = np.arange(6.0)
        w = np.zeros((1, 1, 2, 1))
        w[0, 0, 1, 0] = 1.0
        out = harmonic_conv(x, HarmonicKernel(w, anchor=1, dilation=1))
        assert np.array_equal(out[0, :, 0], [0.0, 2.0, 4.0, 0.0, 0.0, 0.0])

    def test_dilation_strides_time(self):
        # single backward tap at tau=-1 with dilation 3 reads t+3
        x = np.zeros((1, 2, 8))
        x[0, 1] = np.arange(8.0)
        w = np.zeros((1, 1, 1, 3))
        w[0, 0, 0, 0] = 1.0  # tau = -1
        out = harmonic_conv(x, HarmonicKernel(w, anchor=1, dilation=3))
        assert np.array_equal(out[0, 1], [3, 4, 5, 6, 7, 0, 0, 0])

    def test_anchor_two_fractional_rows(self):
        # anchor 2, k=1: out[w] = x[w/2] for even w only
        x = np.zeros((1, 6, 1))
        x[0, :, 0] = np.arange(6.0) + 1
        w = np.ones((1, 1, 1, 1))
        out = harmonic_conv(x, HarmonicKernel(w, anchor=2, dilation=1))
        assert np.array_equal(out[0, :, 0], [1.0, 0.0, 2.0, 0.0, 3.0, 0.0])


class TestConvNodeGradients:
    def test_weight_and_input_gradients_match_fd(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 7, 6))
        w = rng.normal(size=(2, 2, 3, 3))
        kernel = HarmonicKernel(w, anchor=1, dilation=2)

        def loss_of(xv, wv):
            out = harmonic_conv_nodes(xv, wv)
            return 0.5 * float(np.sum(out ** 2))

        def harmonic_conv_nodes(xv, wv):
            return harmonic_conv(xv, HarmonicKernel(wv, anchor=1, dilation=2))

        xn, wn = ad.constant(x), ad.constant(w)
        out = conv_node(xn, wn, H=3, T=1, dilation=2, anchor=1)
        loss = ad.Node(0.5 * np.sum(out.value ** 2), [(out, lambda g: g * out.value)])
        ad.backward(loss)

        eps = 1e-6
        for _ in range(10):
            i = tuple(rng.integers(0, s) for s in w.shape)
            wp, wm = w.copy(), w.copy()
            wp[i] += eps
            wm[i] -= eps
            fd = (loss_of(x, wp) - loss_of(x, wm)) / (2 * eps)
            assert wn.grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)
        for _ in range(10):
            i = tuple(rng.integers(0, s) for s in x.shape)
            xp, xm = x.copy(), x.copy()
            xp[i] += eps
            xm[i] -= eps
            fd = (loss_of(xp, w) - loss_of(xm, w)) / (2 * eps)
            assert xn.grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestNetwork:
    def test_forward_shape_and_nonnegativity(self):
        cfg = NetConfig(channels=(4, 8), in_channels=3)
        store = init_params(cfg, seed=0)
        z = make_input(cfg, bins=9, frames=10, seed=1)
        out = forward(cfg, store, z)
        assert out.shape == (1, 9, 10)
        assert np.all(out >= 0)

    def test_input_noise_range_and_determinism(self):
        cfg = NetConfig(in_channels=5)
        z1 = make_input(cfg, 8, 8, seed=7)
        z2 = make_input(cfg, 8, 8, seed=7)
        assert z1.shape == (5, 8, 8)
        assert np.array_equal(z1, z2)
        assert z1.min() >= 0.0 and z1.max() <= 0.1

    def test_init_determinism(self):
        cfg = NetConfig(channels=(4, 8))
        a = init_params(cfg, seed=3)
        b = init_params(cfg, seed=3)
        assert sorted(a.names()) == sorted(b.names())
        for name in a.names():
            assert np.array_equal(a.weights[name], b.weights[name])

    def test_frames_padded_to_pool_depth(self):
        # frame counts that are not multiples of 2**depth still work
        cfg = NetConfig(channels=(4, 8), in_channels=2)
        store = init_params(cfg, seed=0)
        for frames in (5, 7, 12):
            z = make_input(cfg, bins=6, frames=frames, seed=1)
            out = forward(cfg, store, z)
            assert out.shape == (1, 6, frames)


class TestFullNetGradientCheck:
    def test_analytic_matches_central_differences(self):
        # depth-2 net; >= 25 randomly chosen weights against eps=1e-3 central
        # differences at relative error < 1e-4
        rng = np.random.default_rng(11)
        cfg = NetConfig(channels=(3, 5), in_channels=2, H=2, T=1)
        store = init_params(cfg, seed=5)
        # larger weights keep activations away from the rectifier kinks
        # and the softplus curvature, so eps=1e-3 central differences are a
        # valid reference (the analytic gradient itself is scale-free)
        for name in store.names():
            store.weights[name] *= 3.0
        z = make_input(cfg, bins=7, frames=8, seed=6)
        target = rng.normal(size=(7, 8)) ** 2
        grid = (rng.random((7, 8)) > 0.3).astype(float)
        mask = BinaryMask(grid, bin_hz=1.0)

        _, loss, wnodes = forward_loss(cfg, store, z, target, mask)
        ad.backward(loss)
        grads = {name: node.grad for name, node in wnodes.items()}

        def loss_at(name, idx, delta):
            saved = store.weights[name][idx]
            store.weights[name][idx] = saved + delta
            _, l, _ = forward_loss(cfg, store, z, target, mask)
            store.weights[name][idx] = saved
            return float(l.value)

        eps = 1e-3
        names = sorted(store.names())
        checked = 0
        while checked < 25:
            name = names[int(rng.integers(len(names)))]
            idx = tuple(int(rng.integers(s)) for s in store.weights[name].shape)
            fd = (loss_at(name, idx, eps) - loss_at(name, idx, -eps)) / (2 * eps)
            an = grads[name][idx]
            if abs(fd) < 1e-12 and abs(an) < 1e-12:
                continue
            assert abs(an - fd) / max(abs(fd), abs(an)) < 1e-4
            checked += 1
