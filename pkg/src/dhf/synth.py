"""Synthesized quasi-periodic mixed-signal generator.

Each source is a canonical one-period template replayed with a per-period
amplitude draw and a per-period fundamental following a bounded random walk.
Ground-truth sources and frequency tracks are kept so separation quality can
be scored afterwards.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .timeseries import FrequencyTrack, TimeSeries, linear_interp

# Fraction of (f_max - f_min) used as the random-walk step std per period.
WALK_STEP_FRAC = 0.05


def template_sine(n: int = 256) -> np.ndarray:
    u = np.arange(n) / n
    return np.sin(2 * np.pi * u)


def template_ppg_pulse(n: int = 256, rise: float = 0.15, decay: float = 0.25) -> np.ndarray:
    """Skewed pulse: fast half-cosine systolic rise, slow exponential decay."""
    u = np.arange(n) / n
    out = np.where(
        u < rise,
        0.5 * (1 - np.cos(np.pi * u / rise)),
        np.exp(-(u - rise) / decay),
    )
    out -= out.mean()
    return out / np.abs(out).max()


def template_resp_hump(n: int = 256) -> np.ndarray:
    """Half-sine respiration-like hump, mean-removed."""
    u = np.arange(n) / n
    out = np.sin(np.pi * u)
    out -= out.mean()
    return out / np.abs(out).max()


TEMPLATES = {
    "sine": template_sine,
    "ppg_pulse": template_ppg_pulse,
    "resp_hump": template_resp_hump,
}


@dataclass(frozen=True)
class SourceSpec:
    template: np.ndarray
    amp_mean: float
    amp_std: float
    f_min_hz: float
    f_max_hz: float
    seed: int = 0
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "template", np.asarray(self.template, dtype=np.float64))
        if len(self.template) < 8:
            raise ValueError("template must have length >= 8")
        if not np.all(np.isfinite(self.template)):
            raise ValueError("template must be finite")
        if not (0 < self.f_min_hz <= self.f_max_hz):
            raise ValueError("need 0 < f_min_hz <= f_max_hz")
        if self.amp_std < 0:
            raise ValueError("amp_std must be nonnegative")


@dataclass(frozen=True)
class MixSpec:
    sources: tuple
    noise_mean: float = 0.0
    noise_std: float = 0.0
    duration_s: float = 300.0
    sample_rate_hz: float = 100.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not (1 <= len(self.sources) <= 8):
            raise ValueError("need 1..8 sources")
        n = self.duration_s * self.sample_rate_hz
        if abs(n - round(n)) > 1e-9:
            raise ValueError("duration_s * sample_rate_hz must be integral")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")


def generate_source(spec: SourceSpec, duration_s: float, sample_rate_hz: float):
    """Concatenate resampled template periods; returns (TimeSeries, FrequencyTrack).

    Period i lasts 1/f_i with f_i a clamped random walk in [f_min, f_max];
    fractional sample remainders carry into the next period so phase does not
    drift cumulatively.
    """
    n_total = int(round(duration_s * sample_rate_hz))
    if n_total < sample_rate_hz / spec.f_min_hz:
        raise ValueError("duration shorter than one period at f_min")
    rng = np.random.default_rng(spec.seed)
    tpl = spec.template
    # closed template with the wrap point appended, knots on [0, 1]
    knots = np.arange(len(tpl) + 1) / len(tpl)
    closed = np.concatenate([tpl, tpl[:1]])

    step_std = WALK_STEP_FRAC * (spec.f_max_hz - spec.f_min_hz)
    f = rng.uniform(spec.f_min_hz, spec.f_max_hz)

    chunks = []
    freqs = []
    carry = 0.0
    emitted = 0
    while emitted < n_total:
        exact = sample_rate_hz / f + carry
        n_period = int(round(exact))
        carry = exact - n_period
        n_period = max(n_period, 1)
        amp = max(rng.normal(spec.amp_mean, spec.amp_std), 0.0)
        u = np.arange(n_period) / n_period
        chunks.append(amp * linear_interp(knots, closed, u))
        freqs.append(np.full(n_period, f))
        emitted += n_period
        f = np.clip(f + rng.normal(0.0, step_std), spec.f_min_hz, spec.f_max_hz)

    samples = np.concatenate(chunks)[:n_total]
    track = np.concatenate(freqs)[:n_total]
    return (
        TimeSeries(samples, sample_rate_hz),
        FrequencyTrack(track, source_id=spec.source_id),
    )


def generate_mix(spec: MixSpec):
    """Sum of generated sources plus white noise.

    Returns (mixed, [source TimeSeries...], [FrequencyTrack...]).
    """
    sources, tracks = [], []
    for i, src in enumerate(spec.sources):
        ts, tr = generate_source(src, spec.duration_s, spec.sample_rate_hz)
        if not tr.source_id:
            tr = FrequencyTrack(tr.freq_hz, source_id=f"source{i + 1}")
        sources.append(ts)
        tracks.append(tr)
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(spec.noise_mean, spec.noise_std, len(sources[0])) \
        if spec.noise_std > 0 or spec.noise_mean != 0 else np.zeros(len(sources[0]))
    mixed = np.sum([s.samples for s in sources], axis=0) + noise
    return TimeSeries(mixed, spec.sample_rate_hz), sources, tracks


def mixspec_from_json(doc) -> MixSpec:
    """Build a MixSpec from a JSON document (dict or JSON string)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    sources = []
    for i, s in enumerate(doc["sources"]):
        tpl = s.get("template", "sine")
        template = TEMPLATES[tpl]() if isinstance(tpl, str) else np.asarray(tpl)
        sources.append(SourceSpec(
            template=template,
            amp_mean=s["amp_mean"],
            amp_std=s["amp_std"],
            f_min_hz=s["f_min_hz"],
            f_max_hz=s["f_max_hz"],
            seed=s.get("seed", doc.get("seed", 0) * 1000 + i),
            source_id=s.get("source_id", f"source{i + 1}"),
        ))
    return MixSpec(
        sources=tuple(sources),
        noise_mean=doc.get("noise_mean", 0.0),
        noise_std=doc.get("noise_std", 0.0),
        duration_s=doc.get("duration_s", 300.0),
        sample_rate_hz=doc.get("sample_rate_hz", 100.0),
        seed=doc.get("seed", 0),
    )


# Table-style presets used by the reproduction harness: 5 mixes, 2-3 sources
# each, parameterized by (amp_mean, amp_std, f_min, f_max) and a noise std.
MIX_PRESETS = {
    "msig1": {
        "sources": [
            {"template": "ppg_pulse", "amp_mean": 0.08, "amp_std": 0.02, "f_min_hz": 0.9, "f_max_hz": 1.7},
            {"template": "ppg_pulse", "amp_mean": 0.03, "amp_std": 0.01, "f_min_hz": 1.8, "f_max_hz": 3.0},
        ],
        "noise_std": 0.003,
    },
    "msig2": {
        "sources": [
            {"template": "ppg_pulse", "amp_mean": 0.08, "amp_std": 0.01, "f_min_hz": 0.8, "f_max_hz": 1.2},
            {"template": "ppg_pulse", "amp_mean": 0.06, "amp_std": 0.02, "f_min_hz": 1.0, "f_max_hz": 2.1},
        ],
        "noise_std": 0.01,
    },
    "msig3": {
        "sources": [
            {"template": "ppg_pulse", "amp_mean": 0.4, "amp_std": 0.1, "f_min_hz": 1.4, "f_max_hz": 2.3},
            {"template": "ppg_pulse", "amp_mean": 0.03, "amp_std": 0.01, "f_min_hz": 1.6, "f_max_hz": 3.0},
        ],
        "noise_std": 0.04,
    },
    "msig4": {
        "sources": [
            {"template": "resp_hump", "amp_mean": 0.74, "amp_std": 0.1, "f_min_hz": 0.5, "f_max_hz": 0.9},
            {"template": "ppg_pulse", "amp_mean": 0.08, "amp_std": 0.01, "f_min_hz": 1.1, "f_max_hz": 1.8},
            {"template": "ppg_pulse", "amp_mean": 0.06, "amp_std": 0.01, "f_min_hz": 1.8, "f_max_hz": 2.9},
        ],
        "noise_std": 0.01,
    },
    "msig5": {
        "sources": [
            {"template": "resp_hump", "amp_mean": 0.6, "amp_std": 0.2, "f_min_hz": 0.5, "f_max_hz": 0.9},
            {"template": "ppg_pulse", "amp_mean": 0.07, "amp_std": 0.01, "f_min_hz": 1.0, "f_max_hz": 2.0},
            {"template": "ppg_pulse", "amp_mean": 0.04, "amp_std": 0.01, "f_min_hz": 2.1, "f_max_hz": 3.5},
        ],
        "noise_std": 0.001,
    },
}


def preset_mixspec(name: str, duration_s: float = 300.0, sample_rate_hz: float = 100.0,
                   seed: int = 0) -> MixSpec:
    doc = dict(MIX_PRESETS[name.lower()])
    doc = {**doc, "duration_s": duration_s, "sample_rate_hz": sample_rate_hz, "seed": seed}
    return mixspec_from_json(doc)
