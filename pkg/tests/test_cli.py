"""Command-line interface: config handling, exit codes, artifacts, determinism."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dhf.cli import ConfigError, load_config, main, resolve_config

FAST_CONFIG = {
    "gen": {"preset": "msig1", "duration_s": 120.0},
    "net": {"channels": [4, 8], "in_channels": 4},
    "train": {"iters": 8},
}


def _write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def _tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            p = os.path.join(dirpath, name)
            out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


class TestConfig:
    def test_defaults_resolve(self):
        cfg = resolve_config(None)
        assert cfg["stft"]["window_s"] == 30.0
        assert cfg["metrics"]["spo2_k"] == 1.885

    def test_partial_override_merges(self):
        cfg = resolve_config({"train": {"iters": 5}})
        assert cfg["train"]["iters"] == 5
        assert cfg["train"]["lr"] == 3e-3  # untouched default

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            resolve_config({"trian": {}})
        with pytest.raises(ConfigError):
            resolve_config({"train": {"iterations": 5}})

    def test_malformed_json_reports_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"train": }')
        with pytest.raises(ConfigError, match=r":1:"):
            load_config(str(path))


class TestExitCodes:
    def test_bad_config_exits_2(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, {"bogus_section": 1})
        rc = main(["gen", "--config", cfg, "--out-dir", str(tmp_path / "o")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_runtime_failure_exits_1_with_json(self, tmp_path, capsys):
        rc = main(["separate", "--input", str(tmp_path / "missing.csv"),
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err
        assert json.loads(err.strip())["error"]

    def test_gen_ok_exits_0(self, tmp_path):
        cfg = _write_config(tmp_path, {"gen": {"duration_s": 30.0}})
        rc = main(["gen", "--config", cfg, "--out-dir", str(tmp_path / "o")])
        assert rc == 0


class TestGen:
    def test_artifacts_and_manifest(self, tmp_path):
        cfg = _write_config(tmp_path, {"gen": {"duration_s": 30.0}, "seed": 5})
        out = tmp_path / "gen"
        assert main(["gen", "--config", cfg, "--out-dir", str(out)]) == 0
        names = set(os.listdir(out))
        assert {"mixed.csv", "tracks.csv", "manifest.json",
                "source1.csv", "source2.csv"} <= names
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "gen"
        assert manifest["config"]["seed"] == 5

    def test_seed_changes_output(self, tmp_path):
        cfg1 = _write_config(tmp_path, {"gen": {"duration_s": 30.0}, "seed": 1})
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["gen", "--config", cfg1, "--out-dir", str(out1)])
        main(["gen", "--config", cfg1, "--seed", "2", "--out-dir", str(out2)])
        assert (out1 / "mixed.csv").read_bytes() != (out2 / "mixed.csv").read_bytes()


class TestDeterminism:
    def test_gen_twice_byte_identical(self, tmp_path):
        cfg = _write_config(tmp_path, {"gen": {"duration_s": 30.0}})
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen", "--config", cfg, "--out-dir", str(a)]) == 0
        assert main(["gen", "--config", cfg, "--out-dir", str(b)]) == 0
        assert _tree_bytes(a) == _tree_bytes(b)

    def test_separate_twice_byte_identical(self, tmp_path):
        cfg = _write_config(tmp_path, FAST_CONFIG)
        gen = tmp_path / "gen"
        assert main(["gen", "--config", cfg, "--out-dir", str(gen)]) == 0
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            rc = main(["separate", "--input", str(gen / "tracks.csv"),
                       "--config", cfg, "--out-dir", str(out)])
            assert rc == 0
        assert _tree_bytes(a) == _tree_bytes(b)


class TestSeparateAndMetrics:
    def test_pipeline_artifacts(self, tmp_path):
        cfg = _write_config(tmp_path, FAST_CONFIG)
        gen = tmp_path / "gen"
        main(["gen", "--config", cfg, "--out-dir", str(gen)])
        sep = tmp_path / "sep"
        rc = main(["separate", "--input", str(gen / "tracks.csv"),
                   "--config", cfg, "--out-dir", str(sep), "--dump-spec"])
        assert rc == 0
        names = set(os.listdir(sep))
        assert {"est_source1.csv", "est_source2.csv", "residual.csv",
                "diagnostics.json", "manifest.json"} <= names
        assert any(n.endswith(".dhfspec") for n in names)
        diag = json.loads((sep / "diagnostics.json").read_text())
        assert set(diag["rounds"]) == {"source1", "source2"}

        bl = tmp_path / "bl"
        rc = main(["baseline", "--input", str(gen / "tracks.csv"),
                   "--config", cfg, "--out-dir", str(bl)])
        assert rc == 0
        assert {"bl_source1.csv", "bl_source2.csv"} <= set(os.listdir(bl))

        met = tmp_path / "met"
        rc = main(["metrics",
                   "--truth", str(gen / "source1.csv"),
                   "--est", str(sep / "est_source1.csv"),
                   "--truth", str(gen / "source2.csv"),
                   "--est", str(sep / "est_source2.csv"),
                   "--out-dir", str(met)])
        assert rc == 0
        agg = json.loads((met / "aggregate.json").read_text())
        assert agg["n"] == 2
        rows = (met / "rows.csv").read_text().strip().splitlines()
        assert rows[0] == "mix_id,source_id,method,sdr_db,mse"
        assert len(rows) == 3


class TestSpo2Command:
    def test_fit_from_synthetic_channels(self, tmp_path):
        from dhf.timeseries import TimeSeries, write_csv
        fs = 25.0
        n = int(600 * fs)
        t = np.arange(n) / fs
        pulse = np.sin(2 * np.pi * 1.2 * t)
        # R drifts across windows; SaO2 follows the inverse-linear model
        drift = 1.0 + 0.2 * np.floor(t / 150.0)
        k, w0, w1 = 1.885, 9.0e-3, 4.0e-3
        ppg1 = 2.0 + 0.05 * drift * pulse
        ppg2 = 2.0 + 0.05 * pulse
        write_csv(tmp_path / "p1.csv", TimeSeries(ppg1, fs))
        write_csv(tmp_path / "p2.csv", TimeSeries(ppg2, fs))
        sao2_t = np.arange(0, 600, 10.0)
        R_t = 1.0 + 0.2 * np.floor(sao2_t / 150.0)
        sao2 = 1.0 / (w0 + w1 * R_t) - k
        write_csv(tmp_path / "s.csv", TimeSeries(sao2, 0.1))
        out = tmp_path / "out"
        rc = main(["spo2", "--ppg1", str(tmp_path / "p1.csv"),
                   "--ppg2", str(tmp_path / "p2.csv"),
                   "--sao2", str(tmp_path / "s.csv"),
                   "--out-dir", str(out)])
        assert rc == 0
        fit = json.loads((out / "spo2.json").read_text())
        assert fit["pearson_r"] > 0.99
        assert len(fit["windows"]) == 4

    def test_console_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "dhf.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "separate" in proc.stdout
