"""Command-line front end.

Subcommands wire the library end to end over plain files: ``synth`` makes
a seeded benchmark series, ``granulate`` writes granule and feature CSVs,
``train`` fits and saves the four learners, ``forecast`` runs the full
ensemble pipeline, ``evaluate`` scores a forecast CSV, ``cv`` runs the
contiguous k-fold harness, and ``benchmark-opt`` exercises the optimizer
on analytic two-objective problems.

Every command writes its artifacts into ``--out`` together with the
resolved configuration (``config.txt``) and a ``manifest.txt`` listing the
config hash and a checksum per artifact. Outputs are deterministic in
(inputs, config, seed). Exit codes: 0 success, 1 runtime failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import re
import sys
from pathlib import Path

import numpy as np

from .benchmarks import zdt1_front, zdt2_front, zdt3_front, zdt_problem, front_quality
from .config import RunConfig, build_run_config
from .ensemble import LEARNER_ORDER
from .errors import GranucastError
from .evaluation import PointScores, dm_test, interval_scores, point_scores
from .fuzzy_rough import extract_features
from .granulation import granulate_series
from .learners import fit_learner, make_supervised, save_model
from .pipeline import extract_and_split, run_cv, run_forecast
from .sunflower import optimize
from .synth import SynthConfig, write_csv as write_synth_csv
from .timeseries import Series, interpolate_gaps, load_series

_MODEL_ALIASES = {
    "bilstm": "bilstm",
    "cnn_gru": "cnn_gru",
    "cnn-gru": "cnn_gru",
    "lstm_xgb": "lstm_xgb",
    "lstm-xgb": "lstm_xgb",
    "random_forest": "random_forest",
    "rf": "random_forest",
}

_PROBLEMS = ("zdt1", "zdt2", "zdt3")


def _fmt(value) -> str:
    """Shortest decimal text that parses back to the exact float."""
    return repr(float(value))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(out_dir: Path, config_text: str, artifact_names: list[str]) -> None:
    lines = [f"config_sha256 = {hashlib.sha256(config_text.encode()).hexdigest()}"]
    for name in sorted(artifact_names):
        digest = hashlib.sha256((out_dir / name).read_bytes()).hexdigest()
        lines.append(f"{digest}  {name}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _finish_run(out_dir: Path, config_text: str, artifact_names: list[str]) -> None:
    (out_dir / "config.txt").write_text(config_text)
    _write_manifest(out_dir, config_text, artifact_names + ["config.txt"])


def _require_file(path: str) -> int | None:
    if not Path(path).is_file():
        print(f"error: no such file: {path}", file=sys.stderr)
        return 2
    return None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_config(args) -> RunConfig:
    if args.config is not None:
        missing = _require_file(args.config)
        if missing is not None:
            raise SystemExit(missing)
    return build_run_config(preset=args.preset, seed=args.seed, config_path=args.config)


def _load_clean_series(path: str) -> tuple[Series, int]:
    raw = load_series(path)
    return interpolate_gaps(raw), int(raw.gap_mask.sum())


def _level_label(level: float) -> str:
    return f"{round(level * 100):d}"


# --- subcommands ------------------------------------------------------------


def cmd_synth(args) -> int:
    out = _out_dir(args)
    config = SynthConfig(
        samples=args.samples,
        seed=args.seed if args.seed is not None else 0,
        gap_fraction=args.gap_fraction,
    )
    gap_count = write_synth_csv(out / "data.csv", config)
    config_text = "command = synth\n" + "".join(
        f"{f.name} = {getattr(config, f.name)!r}\n"
        for f in sorted(dataclasses.fields(config), key=lambda f: f.name)
    )
    _finish_run(out, config_text, ["data.csv"])
    print(f"rows: {config.samples}")
    print(f"gaps: {gap_count}")
    return 0


def cmd_granulate(args) -> int:
    missing = _require_file(args.data)
    if missing is not None:
        return missing
    out = _out_dir(args)
    run = _run_config(args)
    series, _ = _load_clean_series(args.data)
    granules = granulate_series(series, run.window_size)
    records, cluster_result = extract_features(
        granules, run.cluster, record_trace=args.trace
    )

    _write_rows(
        out / "granules.csv",
        ["window_index", "low", "peak", "up"],
        (
            [i, _fmt(g.low), _fmt(g.peak), _fmt(g.up)]
            for i, g in enumerate(granules.granules)
        ),
    )
    member_cols = [f"membership_{j + 1}" for j in range(run.cluster.cluster_count)]
    _write_rows(
        out / "features.csv",
        ["window_index", *member_cols, "low", "peak", "up", "nearest_cluster"],
        (
            [
                rec.window_index,
                *(_fmt(m) for m in rec.memberships),
                _fmt(rec.granule.low),
                _fmt(rec.granule.peak),
                _fmt(rec.granule.up),
                rec.nearest_cluster,
            ]
            for rec in records
        ),
    )
    names = ["granules.csv", "features.csv"]
    if args.trace:
        _write_rows(
            out / "trace.csv",
            ["iteration", "cluster", "low", "peak", "up"],
            (
                [step, j, *(_fmt(x) for x in centers[j])]
                for step, centers in enumerate(cluster_result.center_trace)
                for j in range(len(centers))
            ),
        )
        names.append("trace.csv")
    _finish_run(out, run.describe(), names)
    print(f"windows: {len(granules)}")
    print(f"clustering iterations: {cluster_result.iterations}")
    return 0


def cmd_train(args) -> int:
    missing = _require_file(args.data)
    if missing is not None:
        return missing
    out = _out_dir(args)
    run = _run_config(args)
    pipeline = run.pipeline()
    series, _ = _load_clean_series(args.data)
    _, _, _, parts, _ = extract_and_split(series, pipeline)
    train_set = make_supervised(parts[0], pipeline.lag)
    kinds = [_MODEL_ALIASES[args.model]] if args.model else list(LEARNER_ORDER)
    names = []
    for kind in kinds:
        model = fit_learner(kind, train_set, pipeline.learners[kind])
        name = f"model_{kind}.npz"
        save_model(model, out / name)
        names.append(name)
        print(f"trained {kind}: {name}")
    _finish_run(out, run.describe(), names)
    return 0


def cmd_forecast(args) -> int:
    missing = _require_file(args.data)
    if missing is not None:
        return missing
    out = _out_dir(args)
    run = _run_config(args)
    solo = _MODEL_ALIASES[args.model] if args.solo else None
    result = run_forecast(_load_clean_series(args.data)[0], run.pipeline(), solo=solo)

    levels = list(result.bundle.intervals)
    header = ["index", "actual", "point"]
    for level in levels:
        label = _level_label(level)
        header += [f"lo{label}", f"hi{label}"]
    rows = []
    for i in range(len(result.bundle.point)):
        row = [
            int(result.test_record_indices[i]),
            _fmt(result.test_set.targets[i]),
            _fmt(result.bundle.point[i]),
        ]
        for level in levels:
            lo, up = result.bundle.intervals[level]
            row += [_fmt(lo[i]), _fmt(up[i])]
        rows.append(row)
    _write_rows(out / "forecast.csv", header, rows)
    names = ["forecast.csv"]

    if result.weight_fit is not None:
        fit = result.weight_fit
        lines = [
            f"chosen {kind} = {_fmt(w)}"
            for kind, w in zip(LEARNER_ORDER, fit.chosen)
        ]
        lines.append(f"validation mape = {_fmt(fit.chosen_objectives[0])}")
        lines.append(f"validation mse = {_fmt(fit.chosen_objectives[1])}")
        lines.append(f"excluded from mape = {fit.excluded_from_mape}")
        lines.append(f"archive size = {len(fit.archive)}")
        (out / "weights.txt").write_text("\n".join(lines) + "\n")
        _write_rows(
            out / "archive.csv",
            ["mape", "mse", *(f"weight_{kind}" for kind in LEARNER_ORDER)],
            (
                [
                    _fmt(entry.objectives[0]),
                    _fmt(entry.objectives[1]),
                    *(_fmt(w) for w in entry.position),
                ]
                for entry in result.weight_fit.archive.members
            ),
        )
        names += ["weights.txt", "archive.csv"]
        print(f"forecast rows: {len(rows)}")
        print(
            "validation objectives: mape="
            f"{_fmt(fit.chosen_objectives[0])} mse={_fmt(fit.chosen_objectives[1])}"
        )
    else:
        print(f"forecast rows: {len(rows)}")
        print(f"solo model: {solo}")
    print(f"test mape = {_fmt(result.test_scores.mape)}")
    _finish_run(out, run.describe(), names)
    return 0


def _parse_forecast_csv(path: str):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [row for row in reader]
    if header[:3] != ["index", "actual", "point"]:
        raise GranucastError(f"{path}: expected forecast columns index,actual,point,...")
    data = np.array([[float(cell) for cell in row[1:]] for row in rows], dtype=np.float64)
    if data.size == 0:
        raise GranucastError(f"{path}: no forecast rows")
    levels = []
    for j in range(3, len(header), 2):
        match = re.fullmatch(r"lo(\d+)", header[j])
        if not match or header[j + 1] != f"hi{match.group(1)}":
            raise GranucastError(f"{path}: malformed interval columns at {header[j]!r}")
        levels.append(int(match.group(1)) / 100.0)
    actual, point = data[:, 0], data[:, 1]
    bounds = {
        level: (data[:, 2 + 2 * k], data[:, 3 + 2 * k]) for k, level in enumerate(levels)
    }
    return actual, point, bounds


def cmd_evaluate(args) -> int:
    for path in filter(None, (args.forecast, args.baseline)):
        missing = _require_file(path)
        if missing is not None:
            return missing
    out = _out_dir(args)
    actual, point, bounds = _parse_forecast_csv(args.forecast)
    scores = point_scores(actual, point)
    pairs = list(zip(PointScores.COLUMNS, scores.as_row()))
    for level in bounds:
        lo, up = bounds[level]
        iv = interval_scores(actual, lo, up, level)
        label = _level_label(level)
        pairs += [
            (f"PICP_{label}", iv.picp),
            (f"PINAW_{label}", iv.pinaw),
            (f"AIS_{label}", iv.ais),
        ]
    if args.baseline is not None:
        base_actual, base_point, _ = _parse_forecast_csv(args.baseline)
        if len(base_actual) != len(actual):
            raise GranucastError("baseline forecast has a different number of rows")
        dm = dm_test(actual - point, base_actual - base_point)
        pairs += [("DM_STAT", dm.statistic), ("DM_REJECT", float(dm.reject))]
    _write_rows(out / "metrics.csv", ["metric", "value"], ((k, _fmt(v)) for k, v in pairs))
    config_text = "command = evaluate\n"
    _finish_run(out, config_text, ["metrics.csv"])
    for key, value in pairs:
        print(f"{key} = {_fmt(value)}")
    return 0


def cmd_cv(args) -> int:
    missing = _require_file(args.data)
    if missing is not None:
        return missing
    out = _out_dir(args)
    run = _run_config(args)
    report = run_cv(_load_clean_series(args.data)[0], run.pipeline(), k=args.folds)
    rows = [
        [fold.fold, *(_fmt(v) for v in fold.scores.as_row())] for fold in report.folds
    ]
    means = np.mean([fold.scores.as_row() for fold in report.folds], axis=0)
    rows.append(["mean", *(_fmt(v) for v in means)])
    _write_rows(out / "cv_scores.csv", ["fold", *report.columns], rows)
    _finish_run(out, run.describe(), ["cv_scores.csv"])
    for name, value in zip(report.columns, means):
        print(f"mean {name} = {_fmt(value)}")
    return 0


def cmd_benchmark_opt(args) -> int:
    out = _out_dir(args)
    run = _run_config(args)
    which = int(args.problem[-1])
    problem = zdt_problem(which, dim=args.dim)
    archive = optimize(problem, run.optimizer)

    if not archive.is_sound():
        print("error: archive soundness check failed", file=sys.stderr)
        return 1
    reference = {1: zdt1_front, 2: zdt2_front, 3: zdt3_front}[which](500)
    igd, spacing = front_quality(archive, reference)

    entries = archive.members
    _write_rows(
        out / "front.csv",
        ["objective_1", "objective_2", *(f"x_{d + 1}" for d in range(args.dim))],
        (
            [
                _fmt(entry.objectives[0]),
                _fmt(entry.objectives[1]),
                *(_fmt(x) for x in entry.position),
            ]
            for entry in entries
        ),
    )
    config_text = run.describe() + f"problem = {args.problem}\ndim = {args.dim}\n"
    _finish_run(out, config_text, ["front.csv"])
    print(f"archive size: {len(entries)}")
    print(f"igd = {_fmt(igd)}")
    print(f"spacing = {_fmt(spacing)}")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value settings file")
    common.add_argument("--seed", type=int, metavar="N", help="base random seed")
    common.add_argument("--out", metavar="DIR", default="run", help="output directory")
    common.add_argument("--preset", choices=("full", "desk"), help="parameter scale")

    parser = argparse.ArgumentParser(
        prog="granucast",
        description="Granular wind-speed forecasting with an optimized ensemble.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic series")
    p.add_argument("--samples", type=int, default=7200)
    p.add_argument("--gap-fraction", type=float, default=0.01)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("granulate", parents=[common], help="write granule and feature CSVs")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--trace", action="store_true", help="dump per-iteration centers")
    p.set_defaults(func=cmd_granulate)

    p = sub.add_parser("train", parents=[common], help="fit and save the four learners")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--model", choices=sorted(_MODEL_ALIASES), help="train this learner only")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("forecast", parents=[common], help="full pipeline forecast")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--model", choices=sorted(_MODEL_ALIASES), help="learner for --solo")
    p.add_argument("--solo", action="store_true", help="bypass the ensemble")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", parents=[common], help="score a forecast CSV")
    p.add_argument("--forecast", required=True, metavar="PATH")
    p.add_argument("--baseline", metavar="PATH", help="second forecast CSV for a DM test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", parents=[common], help="contiguous k-fold evaluation")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("benchmark-opt", parents=[common], help="optimizer benchmark")
    p.add_argument("--problem", required=True, choices=_PROBLEMS)
    p.add_argument("--dim", type=int, default=4)
    p.set_defaults(func=cmd_benchmark_opt)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "forecast" and bool(args.solo) != (args.model is not None):
        parser.error("--solo and --model must be used together")
    try:
        return args.func(args)
    except GranucastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
