"""Pattern alignment: unwarp a signal so a chosen source becomes strictly
periodic at 1 Hz, and restore results back to the original time grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import FrequencyTrack, TimeSeries, linear_interp


@dataclass(frozen=True)
class WarpMap:
    """Correspondence between original time and the unwarped (phase-uniform)
    axis: sample m of the unwarped signal sits at original time t_unwarped_s[m]
    and at phase 2*pi*m / F_s_prime_hz."""

    phase_unrolled: np.ndarray
    t_orig_s: np.ndarray
    t_unwarped_s: np.ndarray
    F_s_prime_hz: float


def unroll_phase(track: FrequencyTrack, sample_rate_hz: float) -> np.ndarray:
    """Cumulative phase of the track: phi[n] = (2*pi/F_s) * sum_{i=1..n} f[i],
    with phi[0] = 0 (f[0] is not consumed)."""
    f = track.freq_hz
    phi = np.empty(len(f))
    phi[0] = 0.0
    np.cumsum(f[1:], out=phi[1:])
    return phi * (2 * np.pi / sample_rate_hz)


def unwarp(ts: TimeSeries, track: FrequencyTrack, F_s_prime_hz: float | None = None):
    """Resample so the tracked source holds a constant 1 Hz fundamental.

    Two sequential linear interpolations: phase -> timestamps at uniform phase
    steps of 2*pi/F'_s, then signal values at those timestamps.
    Returns (unwarped TimeSeries, WarpMap).
    """
    if len(track) != len(ts):
        raise ValueError("track and signal must be aligned 1:1")
    fsp = ts.sample_rate_hz if F_s_prime_hz is None else float(F_s_prime_hz)
    if fsp <= 0:
        raise ValueError("F_s_prime_hz must be positive")
    phi = unroll_phase(track, ts.sample_rate_hz)
    if np.any(np.diff(phi) <= 0):
        raise ValueError("unrolled phase must be strictly increasing")
    t = ts.times()
    dphi = 2 * np.pi / fsp
    m = int(np.floor(phi[-1] / dphi)) + 1
    phi_u = np.arange(m) * dphi
    t_u = linear_interp(phi, t, phi_u)
    x_u = linear_interp(t, ts.samples, t_u)
    return (
        TimeSeries(x_u, fsp, t0_s=0.0),
        WarpMap(phase_unrolled=phi, t_orig_s=t, t_unwarped_s=t_u, F_s_prime_hz=fsp),
    )


def restore(ts_unwarped: TimeSeries, warp: WarpMap) -> TimeSeries:
    """Pattern restoration: interpolate the unwarped signal back onto the
    original uniform grid. Edge queries beyond the unwarped span are clamped."""
    if len(ts_unwarped) != len(warp.t_unwarped_s):
        raise ValueError("unwarped signal does not match the map length")
    t_u = warp.t_unwarped_s
    q = np.clip(warp.t_orig_s, t_u[0], t_u[-1])
    fs = 1.0 / (warp.t_orig_s[1] - warp.t_orig_s[0])
    return TimeSeries(linear_interp(t_u, ts_unwarped.samples, q), fs,
                      t0_s=warp.t_orig_s[0])


def warp_track(track: FrequencyTrack, target_track: FrequencyTrack,
               warp: WarpMap) -> FrequencyTrack:
    """Carry a non-target track into the target's unwarped domain:
    f'(m) = f(t'[m]) / f_target(t'[m])."""
    t = warp.t_orig_s
    f_other = linear_interp(t, track.freq_hz, warp.t_unwarped_s)
    f_tgt = linear_interp(t, target_track.freq_hz, warp.t_unwarped_s)
    return FrequencyTrack(f_other / f_tgt, source_id=track.source_id)
