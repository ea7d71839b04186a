"""STFT analysis/synthesis and the binary spectrogram dump format."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .timeseries import TimeSeries


@dataclass(frozen=True)
class ComplexSpectrogram:
    """One-sided STFT grid, values[frame, bin], plus the framing metadata
    needed to invert it. ``pad`` is the reflect-padding added before analysis
    and ``n_samples`` the original signal length."""

    values: np.ndarray
    window_len_samples: int
    hop_samples: int
    sample_rate_hz: float
    n_samples: int
    pad: int
    t0_s: float = 0.0
    window_kind: str = "hann"

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("values must be [frames x bins]")
        if self.values.shape[1] != self.window_len_samples // 2 + 1:
            raise ValueError("bins must equal window_len/2 + 1")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    @property
    def bin_hz(self) -> float:
        return self.sample_rate_hz / self.window_len_samples

    def freq_of_bin(self, b) -> np.ndarray:
        return np.asarray(b) * self.bin_hz

    def bin_of_freq(self, f_hz) -> np.ndarray:
        return np.rint(np.asarray(f_hz) / self.bin_hz).astype(int)

    def frame_span(self, frame: int) -> tuple[int, int]:
        """Original-signal sample span [start, end) covered by a frame
        (clipped to the signal)."""
        start = frame * self.hop_samples - self.pad
        end = start + self.window_len_samples
        return max(start, 0), min(end, self.n_samples)


@dataclass(frozen=True)
class MagPhase:
    magnitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        if self.magnitude.shape != self.phase.shape:
            raise ValueError("magnitude and phase must be congruent")


def _hann(n: int) -> np.ndarray:
    # periodic Hann: satisfies constant-overlap-add at hop = n/4
    return 0.5 * (1 - np.cos(2 * np.pi * np.arange(n) / n))


def stft(ts: TimeSeries, window_s: float, hop_s: float) -> ComplexSpectrogram:
    """Hann-windowed one-sided STFT with half-window reflect padding."""
    fs = ts.sample_rate_hz
    win = int(round(window_s * fs))
    hop = int(round(hop_s * fs))
    if win < 16:
        raise ValueError("window must cover at least 16 samples")
    if hop > win or hop < 1:
        raise ValueError("need 1 <= hop <= window")
    x = ts.samples
    if len(x) < win:
        raise ValueError("signal shorter than one window")
    pad = win // 2
    n_frames = int(np.ceil(len(x) / hop)) + 1
    # right padding sized so every original sample is covered by full frames
    need = (n_frames - 1) * hop + win
    right = max(need - len(x) - pad, pad)
    # np.pad reflect caps at len-1; spill the (rare) remainder with zeros
    r0 = min(right, len(x) - 1)
    xp = np.pad(x, (pad, r0), mode="reflect")
    if right > r0:
        xp = np.pad(xp, (0, right - r0))
    w = _hann(win)
    frames = np.lib.stride_tricks.sliding_window_view(xp, win)[::hop][:n_frames]
    values = np.fft.rfft(frames * w, axis=1)
    return ComplexSpectrogram(values, win, hop, fs, n_samples=len(x), pad=pad, t0_s=ts.t0_s)


def istft(spec: ComplexSpectrogram) -> TimeSeries:
    """Weighted overlap-add inverse; exact wherever the window-square sum is positive."""
    win, hop = spec.window_len_samples, spec.hop_samples
    if hop > win or hop < 1 or spec.frames < 1:
        raise ValueError("inconsistent framing metadata")
    w = _hann(win)
    frames = np.fft.irfft(spec.values, n=win, axis=1) * w
    total = (spec.frames - 1) * hop + win
    out = np.zeros(total)
    norm = np.zeros(total)
    for i in range(spec.frames):
        out[i * hop:i * hop + win] += frames[i]
        norm[i * hop:i * hop + win] += w * w
    good = norm > 1e-12
    out[good] /= norm[good]
    out = out[spec.pad:spec.pad + spec.n_samples]
    return TimeSeries(out, spec.sample_rate_hz, spec.t0_s)


def split_mag_phase(spec: ComplexSpectrogram) -> MagPhase:
    mag = np.abs(spec.values)
    phase = np.angle(spec.values)
    phase[mag == 0] = 0.0  # arg(0) is undefined; keep the grid total
    phase[phase <= -np.pi] = np.pi
    return MagPhase(mag, phase)


def combine_mag_phase(mp: MagPhase, like: ComplexSpectrogram) -> ComplexSpectrogram:
    values = mp.magnitude * np.exp(1j * mp.phase)
    return ComplexSpectrogram(values, like.window_len_samples, like.hop_samples,
                              like.sample_rate_hz, like.n_samples, like.pad,
                              like.t0_s, like.window_kind)


def write_dhfspec(path, spec: ComplexSpectrogram) -> None:
    """Dump format: ASCII header ``DHFSPEC v1 frames bins window hop fs`` then
    little-endian float32 (re, im) pairs, row-major by frame."""
    with open(path, "wb") as fh:
        fh.write(f"DHFSPEC v1 {spec.frames} {spec.bins} "
                 f"{spec.window_len_samples} {spec.hop_samples} "
                 f"{spec.sample_rate_hz:.17g}\n".encode("ascii"))
        inter = np.empty((spec.frames, spec.bins, 2), dtype="<f4")
        inter[..., 0] = spec.values.real
        inter[..., 1] = spec.values.imag
        fh.write(inter.tobytes())


def read_dhfspec(path) -> ComplexSpectrogram:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if header[:2] != ["DHFSPEC", "v1"]:
            raise ValueError("not a DHFSPEC v1 file")
        frames, bins, win, hop = (int(v) for v in header[2:6])
        fs = float(header[6])
        raw = np.frombuffer(fh.read(frames * bins * 2 * 4), dtype="<f4")
    inter = raw.reshape(frames, bins, 2).astype(np.float64)
    values = inter[..., 0] + 1j * inter[..., 1]
    n_samples = (frames - 1) * hop  # best-effort; dump drops exact length
    return ComplexSpectrogram(values, win, hop, fs, n_samples=n_samples, pad=win // 2)
