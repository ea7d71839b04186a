"""Binary spectrogram masks hiding non-target harmonics, plus the
masked-energy-ratio diagnostic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ComplexSpectrogram


@dataclass(frozen=True)
class BinaryMask:
    """0/1 grid congruent to a spectrogram; 1 = visible to the loss."""

    grid: np.ndarray
    bin_hz: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.grid)
        if not np.isin(g, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        object.__setattr__(self, "grid", g.astype(np.float64))

    @property
    def shape(self):
        return self.grid.shape


def build_mask(spec_shape, bin_hz: float, nontarget_tracks, halfwidth_bins: int = 2,
               max_harmonics: int = 10, track_spread_hz=None) -> BinaryMask:
    """All-ones grid with zero bands at every harmonic of every non-target track.

    nontarget_tracks: per-source arrays of one frequency (Hz) per frame.
    track_spread_hz: optional per-source arrays of per-frame half-spread; the
    zero band for harmonic h widens by h * spread to cover frequency drift
    within a frame. The DC bin stays visible and is excluded from banding.
    """
    frames, bins = spec_shape
    if halfwidth_bins < 1:
        raise ValueError("halfwidth_bins must be >= 1")
    grid = np.ones((frames, bins))
    nyq_bin = bins - 1
    for s, track in enumerate(nontarget_tracks):
        track = np.asarray(track, dtype=np.float64)
        if len(track) != frames:
            raise ValueError("per-frame track length must equal frame count")
        if np.any(track <= 0):
            raise ValueError("track frequencies must be positive")
        spread = (np.asarray(track_spread_hz[s], dtype=np.float64)
                  if track_spread_hz is not None else np.zeros(frames))
        for h in range(1, max_harmonics + 1):
            centers = np.rint(h * track / bin_hz).astype(int)
            extra = np.rint(h * spread / bin_hz).astype(int)
            for tau in range(frames):
                c = centers[tau]
                if c > nyq_bin:
                    continue
                lo = max(c - halfwidth_bins - extra[tau], 1)  # keep DC visible
                hi = min(c + halfwidth_bins + extra[tau], nyq_bin)
                if lo <= hi:
                    grid[tau, lo:hi + 1] = 0.0
    grid[:, 0] = 1.0
    return BinaryMask(grid, bin_hz=bin_hz)


def masked_energy_ratio(mask: BinaryMask, target_spec: ComplexSpectrogram,
                        mixed_spec: ComplexSpectrogram) -> float:
    """Fraction of concealed-cell energy that belongs to the target source.

    Low values flag hard separation regimes (weak target under strong
    interference). Returns 1.0 when nothing is concealed.
    """
    if mask.shape != target_spec.values.shape or mask.shape != mixed_spec.values.shape:
        raise ValueError("mask and spectrograms must be congruent")
    hidden = mask.grid == 0
    denom = np.sum(np.abs(mixed_spec.values[hidden]) ** 2)
    if denom == 0:
        return 1.0
    num = np.sum(np.abs(target_spec.values[hidden]) ** 2)
    return float(num / denom)
