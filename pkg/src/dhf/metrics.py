"""Separation quality metrics and the two-wavelength SpO2 estimation chain."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal as _sig

from .timeseries import TimeSeries


@dataclass(frozen=True)
class EvalRow:
    mix_id: str
    source_id: str
    method: str
    sdr_db: float
    mse: float

    def __post_init__(self):
        if self.mse < 0:
            raise ValueError("mse must be nonnegative")


def sdr_db(truth: TimeSeries, estimate: TimeSeries) -> float:
    """10*log10(truth energy / error energy); +inf when the error is exactly zero."""
    a, b = truth.samples, estimate.samples
    if len(a) != len(b):
        raise ValueError("signals must have equal length")
    num = float(np.sum(a * a))
    if num == 0:
        raise ValueError("truth has zero energy")
    den = float(np.sum((a - b) ** 2))
    if den == 0:
        return math.inf
    return 10.0 * math.log10(num / den)


def mse(truth: TimeSeries, estimate: TimeSeries) -> float:
    a, b = truth.samples, estimate.samples
    if len(a) != len(b):
        raise ValueError("signals must have equal length")
    return float(np.mean((a - b) ** 2))


def aggregate(rows) -> dict:
    """SDR averaged in the linear domain, MSE averaged geometrically.
    Infinite-SDR rows are excluded with a warning (degenerate cases only)."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to aggregate")
    finite = [r for r in rows if math.isfinite(r.sdr_db)]
    if len(finite) < len(rows):
        warnings.warn(f"excluded {len(rows) - len(finite)} infinite-SDR rows from aggregate")
    if not finite:
        raise ValueError("no finite rows to aggregate")
    lin = np.array([10.0 ** (r.sdr_db / 10.0) for r in finite])
    mses = np.array([r.mse for r in finite])
    if np.any(mses <= 0):
        raise ValueError("geometric MSE averaging requires positive values")
    return {
        "mean_sdr_db": float(10.0 * np.log10(lin.mean())),
        "geo_mean_mse": float(np.exp(np.mean(np.log(mses)))),
        "n": len(finite),
    }


def _window_ac(x: np.ndarray, fs: float, mode: str) -> float:
    """Pulsatile amplitude of one window: mean per-period peak-to-trough, or
    an RMS-equivalent sine amplitude."""
    detr = x - x.mean()
    if mode == "rms":
        return float(2.0 * math.sqrt(2.0) * detr.std())
    # dominant period from the spectrum sets the peak-search distance
    spec = np.abs(np.fft.rfft(detr))
    spec[0] = 0.0
    f0 = np.argmax(spec) * fs / len(x)
    if f0 <= 0:
        return 0.0
    dist = max(int(0.6 * fs / f0), 1)
    peaks, _ = _sig.find_peaks(detr, distance=dist)
    troughs, _ = _sig.find_peaks(-detr, distance=dist)
    if len(peaks) == 0 or len(troughs) == 0:
        return float(detr.max() - detr.min())
    return float(detr[peaks].mean() - detr[troughs].mean())


def modulation_ratio(ppg_l1: TimeSeries, ppg_l2: TimeSeries, window_s: float = 150.0,
                     ac_mode: str = "peak_trough") -> np.ndarray:
    """Per-window ratio of AC/DC fractions across the two wavelengths.

    AC is the pulsatile amplitude of the window, DC its raw mean; windows tile
    the common duration (2.5 minutes by default).
    """
    if len(ppg_l1) != len(ppg_l2):
        raise ValueError("channels must have equal length")
    fs = ppg_l1.sample_rate_hz
    n_win = int(round(window_s * fs))
    if n_win < 2 or n_win > len(ppg_l1):
        raise ValueError("window does not fit the signals")
    out = []
    for start in range(0, len(ppg_l1) - n_win + 1, n_win):
        ratios = []
        for ch in (ppg_l1, ppg_l2):
            w = ch.samples[start:start + n_win]
            dc = float(w.mean())
            if abs(dc) < 1e-9:
                raise ArithmeticError("window DC component is (near) zero")
            ratios.append(_window_ac(w, fs, ac_mode) / dc)
        out.append(ratios[0] / ratios[1])
    return np.asarray(out)


@dataclass(frozen=True)
class OxiSample:
    R: float
    SaO2: float
    timestamp_s: float = 0.0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("modulation ratio must be positive")
        if not (0 <= self.SaO2 <= 100):
            raise ValueError("SaO2 must be a percentage")


@dataclass(frozen=True)
class SpO2Fit:
    w0: float
    w1: float
    k: float
    pearson_r: float

    def predict(self, R):
        return 1.0 / (self.w0 + self.w1 * np.asarray(R)) - self.k


def fit_spo2(samples, k: float = 1.885) -> SpO2Fit:
    """Least squares of 1/(SaO2 + k) on R; predictions invert the line."""
    samples = list(samples)
    R = np.array([s.R for s in samples])
    Y = np.array([s.SaO2 for s in samples])
    if len(np.unique(R)) < 2:
        raise ValueError("need at least two distinct R values")
    Yp = 1.0 / (Y + k)
    A = np.column_stack([np.ones_like(R), R])
    (w0, w1), *_ = np.linalg.lstsq(A, Yp, rcond=None)
    fit = SpO2Fit(float(w0), float(w1), k, 0.0)
    pred = fit.predict(R)
    r = float(np.corrcoef(pred, Y)[0, 1])
    return SpO2Fit(float(w0), float(w1), k, r)
