"""Signal containers, linear interpolation, and zero-phase band-pass filtering."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as _sig


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real signal. Sample n sits at t0_s + n / sample_rate_hz."""

    samples: np.ndarray
    sample_rate_hz: float
    t0_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return self.t0_s + np.arange(len(self.samples)) / self.sample_rate_hz


@dataclass(frozen=True)
class FrequencyTrack:
    """Per-sample fundamental-frequency trace for one source, aligned 1:1 with a TimeSeries."""

    freq_hz: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "freq_hz", np.asarray(self.freq_hz, dtype=np.float64))
        if not np.all(np.isfinite(self.freq_hz)):
            raise ValueError("freq_hz must be finite")
        if np.any(self.freq_hz <= 0):
            raise ValueError("freq_hz must be positive")

    def __len__(self):
        return len(self.freq_hz)


def linear_interp(xs, ys, query):
    """Piecewise-linear interpolation, exact at knots.

    Out-of-range queries raise rather than extrapolate; callers clamp explicitly.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if xs.ndim != 1 or len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("xs and ys must be 1-d, equal length, len >= 2")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    if query.size and (query.min() < xs[0] or query.max() > xs[-1]):
        raise ValueError(
            f"query range [{query.min()}, {query.max()}] exceeds knots [{xs[0]}, {xs[-1]}]"
        )
    return np.interp(query, xs, ys)


def _design_fir(lo_hz: float, hi_hz: float, fs: float) -> np.ndarray:
    # Hamming windowed-sinc; transition set from the band edge so a single pass
    # gives > 50 dB in the stop band (forward-backward application doubles it).
    transition = max(0.15 * (hi_hz - lo_hz), 0.5)
    transition = min(transition, max(fs / 2 - hi_hz, 0.25), hi_hz - lo_hz)
    numtaps = int(np.ceil(3.3 * fs / transition)) | 1
    if lo_hz <= 0.0:
        return _sig.firwin(numtaps, hi_hz, fs=fs, pass_zero=True)
    return _sig.firwin(numtaps, [lo_hz, hi_hz], fs=fs, pass_zero=False)


def bandpass(ts: TimeSeries, lo_hz: float, hi_hz: float) -> TimeSeries:
    """Zero-phase band-pass: forward-backward FIR, >= 40 dB stop-band, no group delay."""
    nyq = ts.sample_rate_hz / 2
    if not (0 <= lo_hz < hi_hz):
        raise ValueError("need 0 <= lo_hz < hi_hz")
    if hi_hz > nyq:
        raise ValueError(f"hi_hz {hi_hz} exceeds Nyquist {nyq}")
    if lo_hz == 0.0 and hi_hz == nyq:
        return TimeSeries(ts.samples.copy(), ts.sample_rate_hz, ts.t0_s)
    taps = _design_fir(lo_hz, min(hi_hz, 0.999 * nyq), ts.sample_rate_hz)
    if len(ts) <= 3 * len(taps):
        raise ValueError("signal too short for the band-pass filter length")
    out = _sig.filtfilt(taps, [1.0], ts.samples)
    return TimeSeries(out, ts.sample_rate_hz, ts.t0_s)


def write_csv(path, ts: TimeSeries, tracks: list[FrequencyTrack] | None = None) -> None:
    """CSV with header ``t,value`` (plus ``f_<id>`` columns when tracks ride along)."""
    tracks = tracks or []
    for tr in tracks:
        if len(tr) != len(ts):
            raise ValueError("track length must match timeseries length")
    header = "t,value" + "".join(f",f_{tr.source_id}" for tr in tracks)
    cols = [ts.times(), ts.samples] + [tr.freq_hz for tr in tracks]
    data = np.column_stack(cols)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def read_csv(path) -> tuple[TimeSeries, list[FrequencyTrack]]:
    """Inverse of :func:`write_csv`. Sample rate inferred from the time column."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[:2] != ["t", "value"]:
        raise ValueError(f"unexpected CSV header {header!r}")
    t = data[:, 0]
    if len(t) < 2:
        raise ValueError("need at least two samples")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
        raise ValueError("time column is not uniformly sampled")
    fs = 1.0 / np.mean(dt)
    ts = TimeSeries(data[:, 1], fs, t0_s=t[0])
    tracks = []
    for j, name in enumerate(header[2:], start=2):
        if not name.startswith("f_"):
            raise ValueError(f"unexpected track column {name!r}")
        tracks.append(FrequencyTrack(data[:, j], source_id=name[2:]))
    return ts, tracks
