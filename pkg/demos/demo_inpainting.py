"""Spectrogram in-painting with the untrained harmonic network.

A strictly periodic pulse train has a line spectrum whose columns barely
change from frame to frame.  We hide 20% of the frames and ask the network --
optimized against the visible cells only -- to reconstruct them.  No training
data is involved; the network structure itself is the prior.
"""
import numpy as np

from dhf.masking import BinaryMask
from dhf.net import NetConfig
from dhf.spectral import split_mag_phase, stft
from dhf.synth import template_ppg_pulse
from dhf.timeseries import TimeSeries, linear_interp
from dhf.train import TrainOptions, fit_prior

fs = 8.0
t = np.arange(int(240 * fs)) / fs
tpl = template_ppg_pulse()
knots = np.arange(len(tpl) + 1) / len(tpl)
x = linear_interp(knots, np.concatenate([tpl, tpl[:1]]), t % 1.0)

spec = stft(TimeSeries(x, fs), window_s=8.0, hop_s=2.0)
mag = split_mag_phase(spec).magnitude
print(f"spectrogram: {spec.frames} frames x {spec.bins} bins")

rng = np.random.default_rng(0)
edge = int(np.ceil(spec.window_len_samples / spec.hop_samples))
interior = np.arange(edge, spec.frames - edge)  # skip padding transients
hidden_frames = rng.choice(interior, size=round(0.2 * spec.frames),
                           replace=False)
grid = np.ones_like(mag)
grid[hidden_frames, :] = 0.0
print(f"hiding {len(hidden_frames)} frames "
      f"({100 * (1 - grid.mean()):.0f}% of cells)")

out, report = fit_prior(NetConfig(), mag, BinaryMask(grid, spec.bin_hz),
                        TrainOptions(iters=2000))
hid = grid == 0
rel = np.sqrt(np.sum((out[hid] - mag[hid]) ** 2) / np.sum(mag[hid] ** 2))
print(f"loss {report.loss_curve[0]:.0f} -> {report.final_loss:.1f} "
      f"over {report.iterations} iterations")
print(f"hidden-region relative RMSE: {rel:.3f}")
