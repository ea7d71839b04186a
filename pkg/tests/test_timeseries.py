"""Signal containers, interpolation, filtering, and CSV round trips."""
import numpy as np
import pytest

from dhf.timeseries import (FrequencyTrack, TimeSeries, bandpass, linear_interp,
                            read_csv, write_csv)


class TestLinearInterp:
    def test_exact_at_knots(self):
        xs = np.array([0.0, 1.0, 3.0, 7.0])
        ys = np.array([2.0, -1.0, 5.0, 5.0])
        assert np.array_equal(linear_interp(xs, ys, xs), ys)

    def test_hand_oracle_midpoints(self):
        # segment midpoints are exact arithmetic means of the endpoints
        xs = np.array([0.0, 2.0, 4.0])
        ys = np.array([1.0, 3.0, -5.0])
        out = linear_interp(xs, ys, [1.0, 3.0])
        assert out[0] == pytest.approx(2.0, abs=0)
        assert out[1] == pytest.approx(-1.0, abs=0)

    def test_general_position(self):
        # y = 4 + (x - 1) * (10 - 4) / (3 - 1) evaluated at x = 1.5 -> 5.5
        out = linear_interp([1.0, 3.0], [4.0, 10.0], [1.5])
        assert out[0] == pytest.approx(5.5, abs=1e-15)

    def test_out_of_range_raises(self):
        with pytest.raises(ValueError):
            linear_interp([0.0, 1.0], [0.0, 1.0], [1.0001])
        with pytest.raises(ValueError):
            linear_interp([0.0, 1.0], [0.0, 1.0], [-0.0001])

    def test_non_monotonic_raises(self):
        with pytest.raises(ValueError):
            linear_interp([0.0, 2.0, 1.0], [0.0, 1.0, 2.0], [0.5])
        with pytest.raises(ValueError):
            linear_interp([0.0, 0.0, 1.0], [0.0, 1.0, 2.0], [0.5])


class TestContainers:
    def test_times_grid(self):
        ts = TimeSeries(np.zeros(5), 10.0, t0_s=2.0)
        assert np.allclose(ts.times(), 2.0 + np.arange(5) / 10.0)
        assert ts.duration_s == pytest.approx(0.5)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([0.0, np.nan]), 1.0)
        with pytest.raises(ValueError):
            FrequencyTrack(np.array([1.0, np.inf]))

    def test_track_positive(self):
        with pytest.raises(ValueError):
            FrequencyTrack(np.array([1.0, 0.0]))


class TestBandpass:
    def test_passband_tone_preserved(self):
        fs = 100.0
        t = np.arange(6000) / fs
        x = TimeSeries(np.sin(2 * np.pi * 2.0 * t), fs)
        y = bandpass(x, 1.0, 4.0)
        core = slice(500, -500)
        err = np.linalg.norm(y.samples[core] - x.samples[core])
        err /= np.linalg.norm(x.samples[core])
        assert err < 0.01

    def test_stopband_tone_attenuated(self):
        fs = 100.0
        t = np.arange(6000) / fs
        x = TimeSeries(np.sin(2 * np.pi * 10.0 * t), fs)
        y = bandpass(x, 1.0, 4.0)
        core = slice(500, -500)
        ratio = np.linalg.norm(y.samples[core]) / np.linalg.norm(x.samples[core])
        assert 20 * np.log10(ratio) < -40

    def test_full_band_is_identity(self):
        fs = 100.0
        rng = np.random.default_rng(0)
        x = TimeSeries(rng.normal(size=1000), fs)
        y = bandpass(x, 0.0, fs / 2)
        assert np.array_equal(y.samples, x.samples)

    def test_bad_band_raises(self):
        x = TimeSeries(np.zeros(1000), 100.0)
        with pytest.raises(ValueError):
            bandpass(x, 4.0, 2.0)
        with pytest.raises(ValueError):
            bandpass(x, 0.0, 51.0)


class TestCsv:
    def test_roundtrip_with_tracks(self, tmp_path):
        rng = np.random.default_rng(3)
        ts = TimeSeries(rng.normal(size=64), 25.0, t0_s=1.5)
        tracks = [FrequencyTrack(rng.uniform(1, 2, 64), source_id="a"),
                  FrequencyTrack(rng.uniform(2, 3, 64), source_id="b")]
        path = tmp_path / "sig.csv"
        write_csv(path, ts, tracks)
        ts2, tracks2 = read_csv(path)
        assert np.allclose(ts2.samples, ts.samples, rtol=0, atol=0)
        assert ts2.sample_rate_hz == pytest.approx(25.0, rel=1e-9)
        assert ts2.t0_s == pytest.approx(1.5)
        assert [t.source_id for t in tracks2] == ["a", "b"]
        for t_in, t_out in zip(tracks, tracks2):
            assert np.allclose(t_out.freq_hz, t_in.freq_hz, rtol=0, atol=0)

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n0,1\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(path)
