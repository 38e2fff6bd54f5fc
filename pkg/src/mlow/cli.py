"""Command-line front door: fit, transform, eval, report, synth.

Exit codes: 0 success, 2 usage error, 3 data/runtime error.  Every command
prints a one-line JSON summary to stdout for machine consumption.  The
MLOW_SEED environment variable overrides the default seed; an explicit
--seed flag wins over both.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import dataio, factorization as fz, forecaster, pipeline, synth
from .errors import MlowError

USAGE_EXIT = 2
DATA_EXIT = 3


def _default_seed() -> int:
    raw = os.environ.get("MLOW_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"MLOW_SEED must be an integer, got {raw!r}")


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _load_table(args) -> dataio.SeriesTable:
    return dataio.load_csv(args.data, has_timestamp=args.timestamp)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV (header row required)")
    p.add_argument("--timestamp", action="store_true",
                   help="treat the first CSV column as a timestamp")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mlow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit low-rank components on the training split")
    _add_data_flags(p_fit)
    p_fit.add_argument("--out", required=True, help="output model JSON path")
    p_fit.add_argument("--T", type=int, default=96, dest="horizon")
    p_fit.add_argument("--K", type=int, default=168, dest="freq_levels")
    p_fit.add_argument("--V", type=int, default=10, dest="rank")
    p_fit.add_argument("--lambda", type=float, default=None, dest="lam")
    p_fit.add_argument("--iters", type=int, default=1000)
    p_fit.add_argument("--method", choices=fz.METHODS, default="hyperplane_nmf")
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--stride", type=int, default=1)
    p_fit.add_argument("--split-ratios", default="0.7,0.1,0.2",
                       help="train/val/test ratios; fit uses the train part")

    p_tr = sub.add_parser("transform", help="decompose a split into piece/residual/mean CSV")
    _add_data_flags(p_tr)
    p_tr.add_argument("--model", required=True)
    p_tr.add_argument("--out", required=True, help="output CSV (long format)")
    p_tr.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p_tr.add_argument("--split-ratios", default="0.7,0.1,0.2")
    p_tr.add_argument("--per-channel", action="store_true",
                      help="write one CSV per channel into a directory instead of one long file")

    p_ev = sub.add_parser("eval", help="ridge forecast evaluation per feature mode")
    _add_data_flags(p_ev)
    p_ev.add_argument("--model", required=True)
    p_ev.add_argument("--L", type=int, default=96, dest="horizon_out")
    p_ev.add_argument("--modes", default="raw,mlow,ma")
    p_ev.add_argument("--out", required=True, help="output report JSON")
    p_ev.add_argument("--split-ratios", default="0.7,0.1,0.2")
    p_ev.add_argument("--stride", type=int, default=1, help="evaluation window stride")
    p_ev.add_argument("--ma-kernel", type=int, default=24)

    p_re = sub.add_parser("report", help="export component weights and spectra bands as CSVs")
    _add_data_flags(p_re)
    p_re.add_argument("--model", required=True)
    p_re.add_argument("--out", required=True, help="output directory")
    p_re.add_argument("--split-ratios", default="0.7,0.1,0.2")

    p_sy = sub.add_parser("synth", help="generate a deterministic synthetic series CSV")
    p_sy.add_argument("--spec", default="tones,trend,noise",
                      help="comma list from {tones,trend,noise}")
    p_sy.add_argument("--len", type=int, required=True, dest="length")
    p_sy.add_argument("--channels", type=int, default=1)
    p_sy.add_argument("--seed", type=int, default=None)
    p_sy.add_argument("--periods", default="24,168")
    p_sy.add_argument("--amplitudes", default=None)
    p_sy.add_argument("--trend-slope", type=float, default=1e-3)
    p_sy.add_argument("--noise-sigma", type=float, default=0.3)
    p_sy.add_argument("--out", required=True)
    return parser


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise MlowError(f"--split-ratios needs three numbers, got {text!r}")
    return tuple(parts)


def _final_objective(model: pipeline.MlowModel, spectra: fz.SpectraMatrix) -> float:
    R = spectra.working
    H = model.components.values
    if model.config.method == "hyperplane_nmf":
        return fz.hyperplane_objective(R, H, model.config.lam)
    if model.config.method == "pca":
        return float(np.linalg.norm(R - (R @ H.T) @ H) ** 2)
    W = fz.infer_coefficients(R, model.components)
    return 0.5 * float(np.linalg.norm(R - W @ H) ** 2)


def cmd_fit(args) -> int:
    if args.rank < 1:
        print("error: V must be >= 1", file=sys.stderr)
        return USAGE_EXIT
    if args.method == "pca" and args.lam is not None:
        print("warning: --method pca ignores --lambda", file=sys.stderr)
    try:
        config = pipeline.MlowConfig(
            horizon=args.horizon,
            freq_levels=args.freq_levels,
            rank=args.rank,
            iterations=args.iters,
            lam=20.0 if args.lam is None else args.lam,
            method=args.method,
            seed=_default_seed() if args.seed is None else args.seed,
            stride=args.stride,
        )
    except MlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    table = _load_table(args)
    splits = dataio.split(table, _parse_ratios(args.split_ratios), lookback=config.window_length)
    start = time.perf_counter()
    spectra = pipeline.collect_training_spectra(splits.train.values, config)
    model = pipeline.fit_from_spectra(spectra, config)
    pipeline.save_model(model, args.out)
    _emit({
        "command": "fit",
        "n_training_spectra": model.fit_metadata["n_training_spectra"],
        "channels": model.fit_metadata["channels"],
        "wall_time_s": round(time.perf_counter() - start, 3),
        "final_objective": _final_objective(model, spectra),
        "out": str(args.out),
    })
    return 0


def _transform_segments(model, slice_table, core_start):
    """Tile the split core with back-to-back horizon-length segments.

    Each segment [s, s+T) is decomposed from the 2K window ending at its
    last sample; segments whose window would start before the slice are
    skipped and counted.
    """
    two_k = model.config.window_length
    T = model.config.horizon
    n = slice_table.length
    skipped = 0
    segments = []
    s = core_start
    while s + T <= n:
        if s + T - two_k >= 0:
            segments.append(s)
        else:
            skipped += 1
        s += T
    return segments, skipped


def cmd_transform(args) -> int:
    model = pipeline.load_model(args.model)
    table = _load_table(args)
    splits = dataio.split(table, _parse_ratios(args.split_ratios),
                          lookback=model.config.window_length)
    chosen = {
        "train": [(splits.train, 0)],
        "val": [(splits.val, splits.core_starts[1])],
        "test": [(splits.test, splits.core_starts[2])],
        "all": [(splits.train, 0), (splits.val, splits.core_starts[1]),
                (splits.test, splits.core_starts[2])],
    }[args.split]
    T = model.config.horizon
    two_k = model.config.window_length
    rank = model.config.rank
    header = ["channel", "t", "x", "x_m", "x_r"] + [f"z_{v}" for v in range(1, rank + 1)]

    rows_by_channel: dict[int, list] = {c: [] for c in range(table.n_channels)}
    total_skipped = 0
    n_windows = 0
    for slice_table, core_start in chosen:
        segments, skipped = _transform_segments(model, slice_table, core_start)
        total_skipped += skipped
        for c in range(table.n_channels):
            series = slice_table.values[:, c]
            for s in segments:
                window = series[s + T - two_k:s + T]
                d = pipeline.transform(model, window)
                n_windows += 1
                tail = window[-T:]
                recon = d.pieces.sum(axis=0) + d.residual + d.mean
                if np.abs(recon - tail).max() > 1e-9:
                    print("error: additive identity violated during transform",
                          file=sys.stderr)
                    return DATA_EXIT
                for j in range(T):
                    rows_by_channel[c].append(
                        [c, s + j, tail[j], d.mean[j], d.residual[j]]
                        + list(d.pieces[:, j])
                    )

    def fmt(v):
        return repr(float(v)) if isinstance(v, (float, np.floating)) else v

    if args.per_channel:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for c, rows in rows_by_channel.items():
            with open(out_dir / f"channel_{c}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows([[fmt(v) for v in row] for row in rows])
        out_path = str(out_dir)
    else:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for c in sorted(rows_by_channel):
                writer.writerows([[fmt(v) for v in row] for row in rows_by_channel[c]])
        out_path = str(args.out)
    _emit({
        "command": "transform",
        "split": args.split,
        "windows": n_windows,
        "skipped_windows": total_skipped,
        "out": out_path,
    })
    return 0


def cmd_eval(args) -> int:
    model = pipeline.load_model(args.model)
    table = _load_table(args)
    splits = dataio.split(table, _parse_ratios(args.split_ratios),
                          lookback=model.config.window_length)
    modes = tuple(m.strip() for m in args.modes.split(",") if m.strip())
    min_rows = model.config.window_length + args.horizon_out
    if splits.test.length < min_rows or splits.val.length < min_rows:
        print(f"error: each split needs at least {min_rows} rows for "
              f"(window={model.config.window_length}, L={args.horizon_out})",
              file=sys.stderr)
        return DATA_EXIT
    reports = forecaster.run_eval(
        splits, model, args.horizon_out, modes=modes,
        stride=args.stride, ma_kernel=args.ma_kernel,
    )
    payload = {
        "config": json.loads(pipeline.model_to_json(model))["config"],
        "version": f"mlow {__version__}",
        "horizon_out": args.horizon_out,
        "stride": args.stride,
        "modes": {mode: rep.to_dict() for mode, rep in reports.items()},
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    horizons_path = str(args.out) + ".horizons.csv"
    with open(horizons_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "h", "mse", "mae"])
        for mode, rep in reports.items():
            for h, (m, a) in enumerate(zip(rep.per_horizon_mse, rep.per_horizon_mae), start=1):
                writer.writerow([mode, h, repr(m), repr(a)])
    _emit({
        "command": "eval",
        "out": str(args.out),
        "horizons_csv": horizons_path,
        **{f"{mode}_mse": rep.mse for mode, rep in reports.items()},
    })
    return 0


def cmd_report(args) -> int:
    model = pipeline.load_model(args.model)
    table = _load_table(args)
    splits = dataio.split(table, _parse_ratios(args.split_ratios),
                          lookback=model.config.window_length)
    spectra = pipeline.collect_training_spectra(splits.train.values, model.config)
    report = pipeline.export_component_report(model, spectra)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return DATA_EXIT

    levels = [f"level_{k}" for k in range(1, model.config.freq_levels + 1)]

    def write_matrix(name, matrix, row_label, row_names):
        with open(out_dir / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([row_label] + levels)
            for label, row in zip(row_names, matrix):
                writer.writerow([label] + [repr(float(x)) for x in row])

    comp_names = list(range(model.config.rank))
    write_matrix("weights.csv", report["weights"], "component", comp_names)
    write_matrix("weights_normalized.csv", report["weights_normalized"], "component", comp_names)
    with open(out_dir / "cosine_matrix.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component"] + [str(v) for v in comp_names])
        for v, row in zip(comp_names, report["cosine_matrix"]):
            writer.writerow([v] + [repr(float(x)) for x in row])
    with open(out_dir / "spectra_band.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "mean", "q025", "q975"])
        for k in range(model.config.freq_levels):
            writer.writerow([
                k + 1,
                repr(float(report["spectra_mean"][k])),
                repr(float(report["spectra_q025"][k])),
                repr(float(report["spectra_q975"][k])),
            ])
    _emit({"command": "report", "out": str(out_dir), "components": model.config.rank})
    return 0


def cmd_synth(args) -> int:
    parts = tuple(p.strip() for p in args.spec.split(",") if p.strip())
    periods = tuple(float(x) for x in args.periods.split(","))
    amplitudes = None
    if args.amplitudes:
        amplitudes = tuple(float(x) for x in args.amplitudes.split(","))
    values, meta = synth.generate_series(
        length=args.length,
        channels=args.channels,
        seed=_default_seed() if args.seed is None else args.seed,
        parts=parts,
        periods=periods,
        amplitudes=amplitudes,
        trend_slope=args.trend_slope,
        noise_sigma=args.noise_sigma,
    )
    table = dataio.SeriesTable(
        channel_names=[f"channel_{c}" for c in range(args.channels)],
        values=values,
    )
    dataio.save_csv(table, args.out)
    sidecar = str(args.out) + ".meta.json"
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit({"command": "synth", "out": str(args.out), "sidecar": sidecar,
           "length": args.length, "channels": args.channels})
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "transform": cmd_transform,
    "eval": cmd_eval,
    "report": cmd_report,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit 2 for usage errors already; pass it through
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except MlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
