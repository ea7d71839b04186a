"""Cyclic phase interpolation across concealed frames, one bin at a time."""
from __future__ import annotations

import numpy as np

from .masking import BinaryMask

_DEGENERATE_MOD = 1e-9


def interp_phase(phase: np.ndarray, mask: BinaryMask) -> np.ndarray:
    """Fill concealed frames of a wrapped phase grid [frames x bins].

    Per bin: form unit phasors at visible frames, linearly interpolate the
    real and imaginary parts over the hidden frames, and take the argument of
    the result, so interpolation follows the shorter arc instead of jumping
    across the +/-pi wrap. Visible frames pass through unchanged. Hidden
    frames before the first (after the last) visible frame hold the nearest
    visible value. Near-antipodal endpoints (interpolated modulus below 1e-9)
    take the phase of the nearest visible frame; a fully hidden bin gets 0.
    """
    phase = np.asarray(phase, dtype=np.float64)
    if phase.shape != mask.shape:
        raise ValueError("phase and mask must be congruent")
    frames, bins = phase.shape
    out = phase.copy()
    idx = np.arange(frames)
    for b in range(bins):
        vis = mask.grid[:, b] == 1
        if vis.all():
            continue
        if not vis.any():
            out[:, b] = 0.0
            continue
        v = idx[vis]
        hidden = idx[~vis]
        re = np.interp(hidden, v, np.cos(phase[v, b]))
        im = np.interp(hidden, v, np.sin(phase[v, b]))
        mod = np.hypot(re, im)
        filled = np.arctan2(im, re)
        bad = mod < _DEGENERATE_MOD
        if bad.any():
            # nearest visible frame, earlier one on ties
            near = v[np.argmin(np.abs(hidden[bad, None] - v[None, :]), axis=1)]
            filled[bad] = phase[near, b]
        out[hidden, b] = filled
    out[out <= -np.pi] += 2 * np.pi
    return out
