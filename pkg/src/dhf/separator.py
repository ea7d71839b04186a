"""Round orchestration: unwarp, mask, in-paint, restore; iterate over sources
on the residual; plus the spectral-masking baseline comparator."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import restore, unwarp, warp_track
from .masking import BinaryMask, build_mask
from .net import NetConfig
from .phase import interp_phase
from .spectral import (ComplexSpectrogram, MagPhase, combine_mag_phase,
                       istft, split_mag_phase, stft)
from .timeseries import FrequencyTrack, TimeSeries
from .train import TrainOptions, fit_prior


@dataclass(frozen=True)
class RoundConfig:
    target_source_id: str
    # Window/hop in unwarped seconds.  Shorter windows limit within-window
    # drift of the other sources' tracks, which keeps the concealment bands
    # narrow; the hop must stay an integer number of seconds so that every
    # frame starts at the same phase of the 1 Hz-aligned target.
    window_s: float = 30.0
    hop_s: float = 10.0
    f_s_prime_hz: float | None = None  # defaults to the input sample rate
    halfwidth_bins: int = 2
    max_harmonics: int = 6
    track_spread: bool = True  # widen harmonic bands by per-frame drift
    dilation: int = 1
    net: NetConfig = NetConfig()
    train: TrainOptions = TrainOptions(iters=2000)
    net_max_freq_hz: float = 10.0  # bins above this are not in-painted
    # Keep network output only at concealed cells on the target's harmonic
    # rows (integer Hz in the aligned domain); zero the rest like masking.
    inpaint_target_rows_only: bool = True

    def __post_init__(self):
        if not (1 <= self.dilation <= 32):
            raise ValueError("dilation must be in 1..32")


@dataclass
class SeparationResult:
    sources: dict
    residual: TimeSeries
    diagnostics: dict
    order: list


def _frame_track_stats(track: FrequencyTrack, spec: ComplexSpectrogram):
    """Per-frame mean and half-spread of an unwarped-domain track."""
    means = np.empty(spec.frames)
    spreads = np.empty(spec.frames)
    for tau in range(spec.frames):
        lo, hi = spec.frame_span(tau)
        if hi <= lo:  # frame fully in padding; fall back to the edge value
            seg = track.freq_hz[-1:] if lo >= len(track) else track.freq_hz[:1]
        else:
            seg = track.freq_hz[lo:hi]
        means[tau] = seg.mean()
        spreads[tau] = 0.5 * (seg.max() - seg.min())
    return means, spreads


def _prepare(mixed: TimeSeries, tracks, cfg: RoundConfig):
    """Shared unwarp/STFT/mask front half of a round."""
    by_id = {t.source_id: t for t in tracks}
    if cfg.target_source_id not in by_id:
        raise ValueError(f"no track for target {cfg.target_source_id!r}")
    target = by_id[cfg.target_source_id]
    unwarped, warp = unwarp(mixed, target, cfg.f_s_prime_hz)
    spec = stft(unwarped, cfg.window_s, cfg.hop_s)
    frame_tracks, spreads = [], []
    for t in tracks:
        if t.source_id == cfg.target_source_id:
            continue
        wt = warp_track(t, target, warp)
        m, s = _frame_track_stats(wt, spec)
        frame_tracks.append(m)
        spreads.append(s)
    mask = build_mask((spec.frames, spec.bins), spec.bin_hz, frame_tracks,
                      halfwidth_bins=cfg.halfwidth_bins,
                      max_harmonics=cfg.max_harmonics,
                      track_spread_hz=spreads if cfg.track_spread else None)
    return spec, mask, warp


def dhf_round(mixed: TimeSeries, tracks, cfg: RoundConfig):
    """One separation round for one target source.

    Pipeline: unwarp with the target's track, STFT, conceal non-target
    harmonics, in-paint the magnitude with the harmonic deep prior, fill the
    phase by cyclic interpolation, invert, and restore to original time.
    Visible cells keep the mixed magnitude (the loss anchors the network to
    them anyway).  Concealed cells take the network output only where they sit
    on the aligned target's integer-Hz harmonic rows (and below the
    in-painting band); everywhere else the correct target value is zero, so
    they fall back to zero as in plain spectral masking.
    Returns (target estimate TimeSeries, diagnostics dict).
    """
    spec, mask, warp = _prepare(mixed, tracks, cfg)
    mp = split_mag_phase(spec)
    nb = min(spec.bins, int(round(cfg.net_max_freq_hz / spec.bin_hz)) + 1)
    net_cfg = replace(cfg.net, dilation=cfg.dilation)
    sub_mask = BinaryMask(mask.grid[:, :nb], bin_hz=spec.bin_hz)
    inpainted, report = fit_prior(net_cfg, mp.magnitude[:, :nb], sub_mask, cfg.train)

    est_mag = mp.magnitude * mask.grid
    hidden = mask.grid[:, :nb] == 0
    if cfg.inpaint_target_rows_only:
        # The aligned target is exactly 1 Hz, so its content lives on integer
        # harmonic rows.  Concealed cells between those rows hold other
        # sources' energy whose correct target value is zero; letting the
        # network fill them dumps spurious energy into the residual that later
        # rounds see in their visible bands.
        bins_per_hz = spec.window_len_samples / spec.sample_rate_hz
        idx = np.arange(nb)
        k = np.maximum(np.round(idx / bins_per_hz), 1.0)
        on_row = np.abs(idx - k * bins_per_hz) <= cfg.halfwidth_bins
        hidden = hidden & on_row[np.newaxis, :]
    est_mag[:, :nb][hidden] = inpainted[hidden]
    est_phase = interp_phase(mp.phase, mask)
    est_spec = combine_mag_phase(MagPhase(est_mag, est_phase), spec)
    estimate = restore(istft(est_spec), warp)
    diagnostics = {
        "train_report": report,
        "hidden_fraction": float(1.0 - mask.grid.mean()),
        "frames": spec.frames,
        "bins": spec.bins,
        "inpaint_bins": nb,
    }
    return estimate, diagnostics


def spectral_masking_baseline(mixed: TimeSeries, tracks, target_source_id: str,
                              cfg: RoundConfig | None = None) -> TimeSeries:
    """Comparator: identical unwarp/STFT/mask path, but concealed cells are
    zeroed instead of in-painted (mixed phase reused)."""
    cfg = replace(cfg or RoundConfig(target_source_id=target_source_id),
                  target_source_id=target_source_id)
    spec, mask, warp = _prepare(mixed, tracks, cfg)
    masked = ComplexSpectrogram(spec.values * mask.grid, spec.window_len_samples,
                                spec.hop_samples, spec.sample_rate_hz,
                                spec.n_samples, spec.pad, spec.t0_s)
    return restore(istft(masked), warp)


def default_order(mixed: TimeSeries, tracks, window_s: float = 30.0,
                  hop_s: float = 10.0) -> list:
    """Source ids by descending mean energy in each source's fundamental band
    of the mixed spectrogram: dominant sources are removed first."""
    spec = stft(mixed, window_s, hop_s)
    power = np.abs(spec.values) ** 2
    scores = {}
    for t in tracks:
        lo = max(spec.bin_of_freq(t.freq_hz.min()) - 1, 0)
        hi = min(spec.bin_of_freq(t.freq_hz.max()) + 1, spec.bins - 1)
        scores[t.source_id] = float(power[:, lo:hi + 1].mean())
    return sorted(scores, key=lambda sid: -scores[sid])


def separate_all(mixed: TimeSeries, tracks, order=None, cfgs=None) -> SeparationResult:
    """Sequential rounds on the running residual; the estimates plus the final
    residual reconstruct the input exactly."""
    ids = [t.source_id for t in tracks]
    if order is None:
        order = default_order(mixed, tracks)
    if sorted(order) != sorted(ids):
        raise ValueError("order must be a permutation of the track source ids")
    cfgs = cfgs or {}
    residual = mixed
    sources, diags = {}, {}
    for sid in order:
        cfg = cfgs.get(sid) or RoundConfig(target_source_id=sid)
        cfg = replace(cfg, target_source_id=sid)
        est, diag = dhf_round(residual, tracks, cfg)
        sources[sid] = est
        diags[sid] = diag
        residual = TimeSeries(residual.samples - est.samples,
                              residual.sample_rate_hz, residual.t0_s)
    return SeparationResult(sources=sources, residual=residual,
                            diagnostics=diags, order=list(order))
