"""Command-line surface: map building, localization queries, evaluation
reports, and benchmarks.

Every command is a thin wrapper over a library call; JSON written here is
produced by the same record builders the library test-suite checks against.
Exit codes: 0 success (a valid "no-localization" answer included), 1 usage
error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import SegLocalError
from .evaluation import (
    ROTATION_ANGLES_DEG,
    localization_run,
    roc_auc,
    rotation_delta,
    timing_bench,
    write_delta_csv,
    write_roc_csv,
    write_rows_csv,
)
from .io import load_cloud, load_map, save_map
from .pipeline import (
    LocalizationResult,
    PipelineConfig,
    build_map,
    localize,
    make_describe_fn,
    resolve_model,
)
from .sampling import fps_benchmark
from .segmentation import euclidean_segment

CLOUD_SUFFIXES = (".ply", ".csv", ".xyz", ".txt")


# --- JSON records (shared between CLI output and tests) --------------------

def pose_record(result: LocalizationResult) -> dict:
    """Stable JSON-ready record for one localization answer."""
    if result.pose is None:
        return {
            "status": "no-localization",
            "reason": result.reason,
            "segments": result.n_segments,
            "correspondences": result.n_correspondences,
        }
    pose = result.pose
    return {
        "status": "localized",
        "rotation": [float(v) for v in pose.transform.rotation.reshape(-1)],  # row-major
        "translation": [float(v) for v in pose.transform.translation],
        "inliers": len(pose.inliers),
        "iterations": pose.iterations_used,
        "mean_residual": float(pose.mean_residual),
        "segments": result.n_segments,
        "correspondences": result.n_correspondences,
    }


def dump_json(record) -> str:
    return json.dumps(record, indent=2)


def format_table(rows) -> str:
    """Two-column aligned table for benchmark reports."""
    rows = [(str(name), str(value)) for name, value in rows]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


# --- configuration ----------------------------------------------------------

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}
_NULLABLE_FIELDS = ("k", "quality_threshold", "model_path")


def _coerce(name: str, raw: str):
    text = raw.strip()
    if name in _NULLABLE_FIELDS and text.lower() in ("none", "null"):
        return None
    if name in ("min_points", "max_points", "k", "max_iter", "min_inliers", "seed", "threads"):
        return int(text)
    if name in ("cluster_tolerance", "z_threshold", "quality_threshold", "inlier_radius"):
        return float(text)
    return text


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise SegLocalError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise SegLocalError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def build_config(args) -> PipelineConfig:
    """Defaults, overridden by the config file, overridden by CLI flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    flag_map = {
        "cluster_tolerance": "cluster_tolerance", "min_points": "min_points",
        "max_points": "max_points", "ground_removal": "ground_removal",
        "z_threshold": "z_threshold", "align": "align", "descriptor": "descriptor",
        "model": "model_path", "k": "k", "quality_threshold": "quality_threshold",
        "estimator": "estimator", "inlier_radius": "inlier_radius",
        "max_iter": "max_iter", "min_inliers": "min_inliers",
        "seed": "seed", "threads": "threads",
    }
    for flag, field in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[field] = value
    return PipelineConfig(**values)


def _add_config_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--config", help="flat key=value config file")
    group.add_argument("--cluster-tolerance", dest="cluster_tolerance", type=float)
    group.add_argument("--min-points", dest="min_points", type=int)
    group.add_argument("--max-points", dest="max_points", type=int)
    group.add_argument("--ground-removal", dest="ground_removal",
                       choices=("none", "z_threshold", "plane_ransac"))
    group.add_argument("--z-threshold", dest="z_threshold", type=float)
    group.add_argument("--align", choices=("none", "pca2d", "pca3d"))
    group.add_argument("--descriptor", choices=("dsm", "eigen"))
    group.add_argument("--model", help="DSMW weight file for the learned descriptor")
    group.add_argument("--k", type=int, help="feature-space neighbors per query segment")
    group.add_argument("--quality-threshold", dest="quality_threshold", type=float)
    group.add_argument("--estimator", choices=("auto", "ransac", "prosac"))
    group.add_argument("--inlier-radius", dest="inlier_radius", type=float)
    group.add_argument("--max-iter", dest="max_iter", type=int)
    group.add_argument("--min-inliers", dest="min_inliers", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--threads", type=int)
    group.add_argument("--format", choices=("ascii_ply", "binary_ply", "xyz_csv"),
                       help="force the cloud file format instead of detecting")


def load_cloud_paths(directory, fmt) -> list:
    root = Path(directory)
    if not root.is_dir():
        raise SegLocalError(f"{directory}: not a directory")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in CLOUD_SUFFIXES)
    if not paths:
        raise SegLocalError(f"{directory}: no cloud files ({', '.join(CLOUD_SUFFIXES)})")
    return [load_cloud(p, fmt) for p in paths]


# --- commands ----------------------------------------------------------------

def cmd_build_map(args) -> int:
    config = build_config(args)
    clouds = load_cloud_paths(args.clouds, args.format)
    segment_map = build_map(clouds, config)
    save_map(segment_map, args.out)
    print(f"map written: {args.out} segments={len(segment_map)} kind={segment_map.kind.value}")
    return 0


def cmd_localize(args) -> int:
    config = build_config(args)
    segment_map = load_map(args.map)
    cloud = load_cloud(args.cloud, args.format)
    result = localize(cloud, segment_map, config)
    print(dump_json(pose_record(result)))
    return 0


def cmd_eval_roc(args) -> int:
    scores, labels = [], []
    with open(args.pairs, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#") or text.lower().startswith("score"):
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 2:
                raise SegLocalError(f"{args.pairs}:{lineno}: expected 'score,label'")
            scores.append(float(parts[0]))
            labels.append(parts[1])
    curve = roc_auc(scores, labels)
    if args.out:
        write_roc_csv(curve, args.out)
    print(f"auc={curve.auc!r} pairs={len(scores)}")
    return 0


def cmd_eval_rotation(args) -> int:
    config = build_config(args)
    cloud = load_cloud(args.cloud, args.format)
    segments = euclidean_segment(cloud, config.segmentation_params())
    if len(segments) < 2:
        raise SegLocalError("need at least 2 segments for the rotation report; "
                            "loosen segmentation parameters")
    model = resolve_model(config)
    alignments = [a.strip() for a in args.alignments.split(",")]
    angles = ROTATION_ANGLES_DEG if args.angles is None else tuple(
        float(a) for a in args.angles.split(","))
    reports = {}
    for alignment in alignments:
        variant = dataclasses.replace(config, align=alignment)
        reports[alignment] = rotation_delta(make_describe_fn(variant, model), segments, angles)
    if args.out:
        write_delta_csv(reports, args.out)
    for alignment, report in reports.items():
        print(f"align={alignment} mean_delta={float(report.mean_delta.mean())!r}")
    return 0


def cmd_eval_localize_run(args) -> int:
    config = build_config(args)
    segment_map = load_map(args.map)
    clouds = load_cloud_paths(args.clouds, args.format)
    run = localization_run(clouds, segment_map, config)
    record = {"count": run.count, "queries": [pose_record(r) for r in run.results]}
    if args.out:
        Path(args.out).write_text(dump_json(record) + "\n", encoding="utf-8")
    print(f"localizations={run.count}/{len(clouds)}")
    return 0


def cmd_eval_bench_fps(args) -> int:
    report = fps_benchmark(args.p, args.s, args.m, args.repeats, rng_seed=args.seed or 0,
                           workers=args.threads)
    if args.out:
        write_rows_csv(report.rows(), args.out)
    print(format_table(report.rows()))
    return 0


def cmd_eval_bench_pipeline(args) -> int:
    config = build_config(args)
    segment_map = load_map(args.map)
    clouds = load_cloud_paths(args.clouds, args.format)
    timings = timing_bench(clouds, segment_map, config, thread_mode=args.thread_mode,
                           repeats=args.repeats, warmup=args.warmup)
    if args.out:
        write_rows_csv(timings.rows(), args.out)
    print(format_table((name, f"{value:.3f}") for name, value in timings.rows()))
    return 0


# --- parser -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seglocal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-map", help="segment + describe clouds into a map file")
    p.add_argument("--clouds", required=True, help="directory of cloud files")
    p.add_argument("--out", required=True, help="output SEGM map path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_build_map)

    p = sub.add_parser("localize", help="localize one cloud within a map")
    p.add_argument("--cloud", required=True)
    p.add_argument("--map", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_localize)

    ev = sub.add_parser("eval", help="evaluation reports and benchmarks")
    evsub = ev.add_subparsers(dest="eval_command", required=True, parser_class=_Parser)

    p = evsub.add_parser("roc", help="ROC/AUC over a score,label pair file")
    p.add_argument("--pairs", required=True, help="CSV rows: score,label(match|non_match)")
    p.add_argument("--out", help="ROC points CSV (gnuplot-compatible)")
    p.set_defaults(func=cmd_eval_roc)

    p = evsub.add_parser("rotation", help="rotation-variation curves")
    p.add_argument("--cloud", required=True)
    p.add_argument("--alignments", default="pca2d,none", help="comma list of alignment modes")
    p.add_argument("--angles", help="comma list of degrees (default 0..360 step 10)")
    p.add_argument("--out", help="CSV with one delta column per alignment")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval_rotation)

    p = evsub.add_parser("localize-run", help="count localizations over a cloud directory")
    p.add_argument("--map", required=True)
    p.add_argument("--clouds", required=True)
    p.add_argument("--out", help="JSON report path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval_localize_run)

    p = evsub.add_parser("bench-fps", help="looped vs batched FPS wall-clock")
    p.add_argument("--p", type=int, required=True, help="segments in the batch")
    p.add_argument("--s", type=int, required=True, help="points per segment")
    p.add_argument("--m", type=int, required=True, help="sample size")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", help="CSV report path")
    p.set_defaults(func=cmd_eval_bench_fps)

    p = evsub.add_parser("bench-pipeline", help="per-stage localization timing")
    p.add_argument("--map", required=True)
    p.add_argument("--clouds", required=True)
    p.add_argument("--thread-mode", dest="thread_mode", default="multi_core",
                   choices=("single_core", "multi_core"))
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--out", help="CSV report path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval_bench_pipeline)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SegLocalError, OSError, ValueError) as exc:
        sys.stderr.write(f"seglocal: error: {exc}\n")
        return 2


def entrypoint():
    raise SystemExit(main())
