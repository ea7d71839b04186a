"""Two-wavelength pulse-oximetry feature extraction and calibration.

The modulation ratio R compares the pulsatile (AC over DC) fraction of the
photoplethysmogram at two optical wavelengths.  Oxygen saturation follows a
hyperbolic calibration curve SaO2 = 1/(w0 + w1*R) - k; we synthesize windows
with known saturation, extract R per window, and fit (w0, w1) back out.
"""
import numpy as np

from dhf.metrics import OxiSample, fit_spo2, modulation_ratio
from dhf.timeseries import TimeSeries

fs = 100.0
k = 1.885
w0_true, w1_true = 9.0e-3, 4.0e-3
rng = np.random.default_rng(7)

samples = []
for sat in (88.0, 92.0, 96.0, 99.0):
    # invert the calibration curve to get the R this saturation implies
    R = (1.0 / (sat + k) - w0_true) / w1_true
    t = np.arange(int(150 * fs)) / fs
    pulse = np.sin(2 * np.pi * 1.2 * t)
    dc1, dc2 = 1.0, 0.8
    ac1 = 0.02 * dc1                    # wavelength-1 pulsatile fraction
    ac2 = ac1 * dc2 / (R * dc1)         # so that (AC1/DC1)/(AC2/DC2) = R
    ppg1 = TimeSeries(dc1 + ac1 / 2 * pulse, fs)
    ppg2 = TimeSeries(dc2 + ac2 / 2 * pulse, fs)
    got_R = modulation_ratio(ppg1, ppg2, window_s=150.0)[0]
    samples.append(OxiSample(R=got_R, SaO2=sat))
    print(f"SaO2 {sat:5.1f}%  ->  R = {got_R:.4f} (designed {R:.4f})")

fit = fit_spo2(samples, k=k)
print(f"recovered w0 = {fit.w0:.6f} (true {w0_true}), "
      f"w1 = {fit.w1:.6f} (true {w1_true}), pearson r = {fit.pearson_r:.6f}")
print("predictions:", np.round(fit.predict([s.R for s in samples]), 2))
