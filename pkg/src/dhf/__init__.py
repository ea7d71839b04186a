"""Single-channel separation of quasi-periodic sources: spectrogram masking
plus harmonic deep-prior in-painting, with a synthesis and evaluation harness.

Submodules are imported lazily so the command-line front end can configure
threading before numpy loads.
"""
from importlib import import_module

__version__ = "0.1.0"

_SUBMODULES = (
    "alignment", "autodiff", "masking", "metrics", "net", "phase",
    "separator", "spectral", "synth", "timeseries", "train",
)

_API = {
    "TimeSeries": "timeseries", "FrequencyTrack": "timeseries",
    "linear_interp": "timeseries", "bandpass": "timeseries",
    "SourceSpec": "synth", "MixSpec": "synth",
    "generate_source": "synth", "generate_mix": "synth",
    "ComplexSpectrogram": "spectral", "MagPhase": "spectral",
    "stft": "spectral", "istft": "spectral",
    "split_mag_phase": "spectral", "combine_mag_phase": "spectral",
    "WarpMap": "alignment", "unroll_phase": "alignment",
    "unwarp": "alignment", "restore": "alignment",
    "BinaryMask": "masking", "build_mask": "masking",
    "masked_energy_ratio": "masking",
    "HarmonicKernel": "net", "NetConfig": "net", "ParamStore": "net",
    "harmonic_conv": "net", "forward": "net",
    "TrainOptions": "train", "TrainReport": "train",
    "inpaint_loss": "train", "fit_prior": "train",
    "interp_phase": "phase",
    "RoundConfig": "separator", "SeparationResult": "separator",
    "dhf_round": "separator", "separate_all": "separator",
    "spectral_masking_baseline": "separator",
    "EvalRow": "metrics", "OxiSample": "metrics",
    "sdr_db": "metrics", "mse": "metrics", "aggregate": "metrics",
    "modulation_ratio": "metrics", "fit_spo2": "metrics",
}

__all__ = sorted(set(_API) | set(_SUBMODULES))


def __getattr__(name):
    if name in _SUBMODULES:
        return import_module(f".{name}", __name__)
    if name in _API:
        return getattr(import_module(f".{_API[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
