"""Command-line front end: gen | separate | baseline | metrics | spo2 | repro-table.

Every run writes a manifest.json echoing the fully resolved configuration so
it can be re-run bit-identically. Exit codes: 0 ok, 1 runtime failure
(diagnostics JSON on stderr), 2 malformed configuration or arguments.
"""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys

# honor the thread cap before numpy picks its pool size
if os.environ.get("DHF_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["DHF_THREADS"])


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "seed": 0,
    "gen": {
        "preset": "msig1",       # one of msig1..msig5, ignored when spec is given
        "spec": None,            # inline mix document (sources, noise_std, ...)
        "duration_s": 300.0,
        "sample_rate_hz": 100.0,
    },
    "stft": {
        "window_s": 30.0,
        "hop_s": 10.0,
        "f_s_prime_hz": None,    # unwarped rate; null = input sample rate
    },
    "mask": {
        "halfwidth_bins": 2,
        "max_harmonics": 6,
        "track_spread": True,
    },
    "net": {
        "channels": [8, 16, 32],
        "in_channels": 8,
        "harmonics": 3,
        "t_taps": 1,
        "dilation": 1,
        "anchor": 1,
        "freq_pooling": False,
        "activation": "leaky_relu",
        "net_max_freq_hz": 10.0,
    },
    "train": {
        "lr": 3e-3,
        "iters": 2000,
        "dtype": "float32",
    },
    "rounds": {
        "order": None,           # null = descending fundamental-band energy
        "bandpass_hz": [0.0, 12.0],
    },
    "metrics": {
        "spo2_k": 1.885,
        "window_s": 150.0,
    },
}


def resolve_config(user: dict | None) -> dict:
    """Deep-merge a user document over the defaults, rejecting unknown keys."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    user = user or {}
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in user.items():
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(cfg[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            for sub, sval in value.items():
                if sub not in cfg[key]:
                    raise ConfigError(f"unknown config key {key}.{sub}")
                cfg[key][sub] = sval
        else:
            cfg[key] = value
    return cfg


def load_config(path) -> dict:
    if path is None:
        return resolve_config(None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return resolve_config(doc)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, command: str, config: dict, extra: dict | None = None) -> None:
    manifest = {"command": command, "config": config}
    manifest.update(extra or {})
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _round_config(config: dict, target_id: str):
    from .net import NetConfig
    from .separator import RoundConfig
    from .train import TrainOptions

    net_c = config["net"]
    return RoundConfig(
        target_source_id=target_id,
        window_s=config["stft"]["window_s"],
        hop_s=config["stft"]["hop_s"],
        f_s_prime_hz=config["stft"]["f_s_prime_hz"],
        halfwidth_bins=config["mask"]["halfwidth_bins"],
        max_harmonics=config["mask"]["max_harmonics"],
        track_spread=config["mask"]["track_spread"],
        dilation=net_c["dilation"],
        net=NetConfig(
            channels=tuple(net_c["channels"]),
            in_channels=net_c["in_channels"],
            H=net_c["harmonics"],
            T=net_c["t_taps"],
            anchor=net_c["anchor"],
            freq_pooling=net_c["freq_pooling"],
            activation=net_c["activation"],
        ),
        train=TrainOptions(
            lr=config["train"]["lr"],
            iters=config["train"]["iters"],
            seed=config["seed"],
            dtype=config["train"]["dtype"],
        ),
        net_max_freq_hz=net_c["net_max_freq_hz"],
    )


def _apply_overrides(config: dict, args) -> dict:
    if getattr(args, "lr", None) is not None:
        config["train"]["lr"] = args.lr
    if getattr(args, "iters", None) is not None:
        config["train"]["iters"] = args.iters
    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    if getattr(args, "dilation", None) is not None:
        config["net"]["dilation"] = args.dilation
    if getattr(args, "harmonics", None) is not None:
        config["net"]["harmonics"] = args.harmonics
    if getattr(args, "depth", None) is not None:
        ch = config["net"]["channels"]
        base = ch[0]
        config["net"]["channels"] = [base * (2 ** i) for i in range(args.depth)]
    return config


def _load_mix_and_tracks(input_path, tracks_path):
    from .timeseries import read_csv
    mixed, inline = read_csv(input_path)
    if tracks_path is not None:
        _, tracks = read_csv(tracks_path)
    else:
        tracks = inline
    if not tracks:
        raise ConfigError("no frequency tracks found; pass --tracks")
    return mixed, tracks


def cmd_gen(args) -> int:
    from .synth import generate_mix, mixspec_from_json, preset_mixspec
    from .timeseries import write_csv

    config = _apply_overrides(load_config(args.config), args)
    g = config["gen"]
    if g["spec"] is not None:
        doc = dict(g["spec"])
        doc.setdefault("duration_s", g["duration_s"])
        doc.setdefault("sample_rate_hz", g["sample_rate_hz"])
        doc.setdefault("seed", config["seed"])
        spec = mixspec_from_json(doc)
    else:
        spec = preset_mixspec(g["preset"], g["duration_s"], g["sample_rate_hz"],
                              seed=config["seed"])
    mixed, sources, tracks = generate_mix(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    write_csv(os.path.join(args.out_dir, "mixed.csv"), mixed)
    for src, tr in zip(sources, tracks):
        write_csv(os.path.join(args.out_dir, f"{tr.source_id}.csv"), src)
    write_csv(os.path.join(args.out_dir, "tracks.csv"), mixed, tracks)
    _write_manifest(args.out_dir, "gen", config,
                    {"sources": [t.source_id for t in tracks]})
    return 0


def cmd_separate(args) -> int:
    from .separator import separate_all
    from .spectral import stft, write_dhfspec
    from .timeseries import bandpass, write_csv
    from .alignment import unwarp

    config = _apply_overrides(load_config(args.config), args)
    mixed, tracks = _load_mix_and_tracks(args.input, args.tracks)
    lo, hi = config["rounds"]["bandpass_hz"]
    mixed = bandpass(mixed, lo, hi)
    order = config["rounds"]["order"]
    cfgs = {t.source_id: _round_config(config, t.source_id) for t in tracks}
    result = separate_all(mixed, tracks, order=order, cfgs=cfgs)
    os.makedirs(args.out_dir, exist_ok=True)
    for sid, est in result.sources.items():
        write_csv(os.path.join(args.out_dir, f"est_{sid}.csv"), est)
    write_csv(os.path.join(args.out_dir, "residual.csv"), result.residual)
    if args.dump_spec:
        by_id = {t.source_id: t for t in tracks}
        for sid in result.order:
            cfg = cfgs[sid]
            unwarped, _ = unwarp(mixed, by_id[sid], cfg.f_s_prime_hz)
            write_dhfspec(os.path.join(args.out_dir, f"spec_{sid}.dhfspec"),
                          stft(unwarped, cfg.window_s, cfg.hop_s))
    diagnostics = {
        "order": result.order,
        "rounds": {
            sid: {
                "final_loss": d["train_report"].final_loss,
                "iterations": d["train_report"].iterations,
                "hidden_fraction": d["hidden_fraction"],
                "frames": d["frames"],
                "bins": d["bins"],
                "inpaint_bins": d["inpaint_bins"],
            }
            for sid, d in result.diagnostics.items()
        },
    }
    _write_json(os.path.join(args.out_dir, "diagnostics.json"), diagnostics)
    _write_manifest(args.out_dir, "separate", config, {"input": args.input})
    return 0


def cmd_baseline(args) -> int:
    from .separator import spectral_masking_baseline
    from .timeseries import bandpass, write_csv

    config = _apply_overrides(load_config(args.config), args)
    mixed, tracks = _load_mix_and_tracks(args.input, args.tracks)
    lo, hi = config["rounds"]["bandpass_hz"]
    mixed = bandpass(mixed, lo, hi)
    os.makedirs(args.out_dir, exist_ok=True)
    for t in tracks:
        est = spectral_masking_baseline(mixed, tracks, t.source_id,
                                        _round_config(config, t.source_id))
        write_csv(os.path.join(args.out_dir, f"bl_{t.source_id}.csv"), est)
    _write_manifest(args.out_dir, "baseline", config, {"input": args.input})
    return 0


def cmd_metrics(args) -> int:
    from .metrics import EvalRow, aggregate, mse, sdr_db
    from .timeseries import read_csv

    if len(args.truth) != len(args.est):
        raise ConfigError("--truth and --est must be given in matching pairs")
    rows = []
    for tpath, epath in zip(args.truth, args.est):
        truth, _ = read_csv(tpath)
        est, _ = read_csv(epath)
        sid = os.path.splitext(os.path.basename(tpath))[0]
        rows.append(EvalRow(args.mix_id, sid, args.method,
                            sdr_db(truth, est), mse(truth, est)))
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "rows.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("mix_id,source_id,method,sdr_db,mse\n")
        for r in rows:
            fh.write(f"{r.mix_id},{r.source_id},{r.method},"
                     f"{r.sdr_db:.6f},{r.mse:.9e}\n")
    _write_json(os.path.join(args.out_dir, "aggregate.json"), aggregate(rows))
    _write_manifest(args.out_dir, "metrics", load_config(args.config))
    return 0


def cmd_spo2(args) -> int:
    import numpy as np
    from .metrics import OxiSample, fit_spo2, modulation_ratio
    from .timeseries import read_csv

    config = load_config(args.config)
    ppg1, _ = read_csv(args.ppg1)
    ppg2, _ = read_csv(args.ppg2)
    sao2, _ = read_csv(args.sao2)
    window_s = config["metrics"]["window_s"]
    R = modulation_ratio(ppg1, ppg2, window_s=window_s)
    centers = ppg1.t0_s + (np.arange(len(R)) + 0.5) * window_s
    sao2_t = sao2.times()
    samples = []
    for r, c in zip(R, centers):
        nearest = int(np.argmin(np.abs(sao2_t - c)))
        samples.append(OxiSample(R=float(r), SaO2=float(sao2.samples[nearest]),
                                 timestamp_s=float(c)))
    fit = fit_spo2(samples, k=config["metrics"]["spo2_k"])
    out = {
        "w0": fit.w0,
        "w1": fit.w1,
        "k": fit.k,
        "pearson_r": fit.pearson_r,
        "windows": [
            {"t_s": s.timestamp_s, "R": s.R, "SaO2": s.SaO2,
             "SpO2": float(fit.predict(s.R))}
            for s in samples
        ],
    }
    os.makedirs(args.out_dir, exist_ok=True)
    _write_json(os.path.join(args.out_dir, "spo2.json"), out)
    _write_manifest(args.out_dir, "spo2", config)
    return 0


def cmd_repro_table(args) -> int:
    from .metrics import EvalRow, aggregate, mse, sdr_db
    from .separator import separate_all, spectral_masking_baseline
    from .synth import MIX_PRESETS, generate_mix, preset_mixspec
    from .timeseries import TimeSeries, bandpass

    config = _apply_overrides(load_config(args.config), args)
    lo, hi = config["rounds"]["bandpass_hz"]
    rows = []
    for name in sorted(MIX_PRESETS):
        spec = preset_mixspec(name, config["gen"]["duration_s"],
                              config["gen"]["sample_rate_hz"], seed=config["seed"])
        mixed, sources, tracks = generate_mix(spec)
        mixed_bp = bandpass(mixed, lo, hi)
        truth = {tr.source_id: bandpass(src, lo, hi)
                 for src, tr in zip(sources, tracks)}
        cfgs = {t.source_id: _round_config(config, t.source_id) for t in tracks}
        result = separate_all(mixed_bp, tracks, cfgs=cfgs)
        for sid, est in result.sources.items():
            rows.append(EvalRow(name, sid, "dhf", sdr_db(truth[sid], est),
                                mse(truth[sid], est)))
        for t in tracks:
            bl = spectral_masking_baseline(mixed_bp, tracks, t.source_id,
                                           cfgs[t.source_id])
            rows.append(EvalRow(name, t.source_id, "masking",
                                sdr_db(truth[t.source_id], bl),
                                mse(truth[t.source_id], bl)))
        print(f"{name}: done", file=sys.stderr)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "table.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("mix_id,source_id,method,sdr_db,mse\n")
        for r in rows:
            fh.write(f"{r.mix_id},{r.source_id},{r.method},"
                     f"{r.sdr_db:.6f},{r.mse:.9e}\n")
    by_key = {(r.mix_id, r.source_id): {} for r in rows}
    for r in rows:
        by_key[(r.mix_id, r.source_id)][r.method] = r
    lines = ["| mix | source | masking SDR (dB) | masking MSE | DHF SDR (dB) | DHF MSE |",
             "|---|---|---|---|---|---|"]
    for (mix_id, sid), methods in sorted(by_key.items()):
        b, d = methods.get("masking"), methods.get("dhf")
        lines.append(f"| {mix_id} | {sid} | {b.sdr_db:.2f} | {b.mse:.2e} "
                     f"| {d.sdr_db:.2f} | {d.mse:.2e} |")
    for method in ("masking", "dhf"):
        agg = aggregate([r for r in rows if r.method == method])
        lines.append(f"| average | {method} | {agg['mean_sdr_db']:.2f} "
                     f"| {agg['geo_mean_mse']:.2e} | | |")
    with open(os.path.join(args.out_dir, "table.md"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(args.out_dir, "repro-table", config)
    return 0


def _add_train_flags(p) -> None:
    p.add_argument("--lr", type=float, help="optimizer learning rate")
    p.add_argument("--iters", type=int, help="optimization iterations per round")
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--dilation", type=int, help="temporal tap dilation")
    p.add_argument("--harmonics", type=int, help="harmonic taps per kernel")
    p.add_argument("--depth", type=int, help="U-Net level count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhf",
        description=__doc__,
        epilog="Default configuration:\n" + json.dumps(DEFAULT_CONFIG, indent=2),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a mixed signal with ground truth")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--out-dir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("separate", help="iterative masking + in-painting separation")
    p.add_argument("--input", required=True, help="mixed-signal CSV")
    p.add_argument("--tracks", help="CSV carrying f_<id> track columns")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dump-spec", action="store_true",
                   help="also dump per-round unwarped spectrograms (DHFSPEC v1)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("baseline", help="spectral-masking comparator")
    p.add_argument("--input", required=True)
    p.add_argument("--tracks")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("metrics", help="SDR/MSE rows and aggregates")
    p.add_argument("--truth", action="append", required=True)
    p.add_argument("--est", action="append", required=True)
    p.add_argument("--mix-id", default="mix")
    p.add_argument("--method", default="dhf")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("spo2", help="two-wavelength SpO2 regression")
    p.add_argument("--ppg1", required=True)
    p.add_argument("--ppg2", required=True)
    p.add_argument("--sao2", required=True, help="reference saturation CSV (t,value)")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_spo2)

    p = sub.add_parser("repro-table", help="regenerate the preset mixes and "
                       "tabulate DHF vs spectral masking")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_repro_table)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: diagnostics JSON on stderr
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
