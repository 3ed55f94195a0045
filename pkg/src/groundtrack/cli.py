"""Command-line entry point wiring the pipeline stages.

Subcommands: track, export, caption, retrieve, evaluate, pipeline,
make-fixture. Errors print to stderr and exit nonzero; data goes to files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import formats
from .captioning import PromptConfig
from .fixtures import make_fixture
from .metrics import MetricsConfig, evaluate
from .model import ValidationError
from .pipeline import (
    ADAPTER_URL_ENV,
    PipelineConfig,
    run_pipeline,
    stage_caption,
    stage_export,
    stage_retrieve,
    stage_track,
    write_text_atomic,
)
from .tracker import TrackerConfig, run_sequence


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend", choices=("stub", "remote"), default="stub",
        help="caption/embedding backend (stub needs no network)",
    )
    parser.add_argument(
        "--adapter-url", default=None,
        help=f"adapter service URL (or set {ADAPTER_URL_ENV})",
    )


def _add_dataset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset-root", type=Path, required=True)
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def _tracker_config(args: argparse.Namespace) -> TrackerConfig:
    if getattr(args, "config", None):
        return TrackerConfig.from_file(args.config)
    return TrackerConfig()


def _prompt_config(args: argparse.Namespace) -> PromptConfig:
    path = getattr(args, "prompt_file", None)
    if path:
        return PromptConfig(prompt_text=Path(path).read_text(encoding="utf-8").strip())
    return PromptConfig()


def _metrics_config(args: argparse.Namespace) -> MetricsConfig:
    kwargs = {}
    if getattr(args, "alpha_grid", None):
        kwargs["alpha_grid"] = tuple(
            float(v) for v in args.alpha_grid.split(",") if v.strip()
        )
    if getattr(args, "unranked_set", False):
        kwargs["unranked_set"] = True
    if getattr(args, "miou_all_ranks", False):
        kwargs["miou_all_ranks"] = True
    if getattr(args, "pooled", False):
        kwargs["pooled"] = True
    return MetricsConfig(**kwargs)


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        dataset_root=args.dataset_root,
        out_dir=args.out,
        tracker=_tracker_config(args),
        metrics=_metrics_config(args),
        backend=getattr(args, "backend", "stub"),
        adapter_url=getattr(args, "adapter_url", None),
        k=getattr(args, "k", 10),
        prompt=_prompt_config(args),
        import_tracks=getattr(args, "import_tracks", None),
        same_video_only=not getattr(args, "all_videos", False),
    )


def cmd_track(args: argparse.Namespace) -> int:
    if args.dets is not None:
        if args.video_id is None:
            raise ValidationError("--dets needs --video-id")
        dets = formats.parse_mot_detections(Path(args.dets).read_text(encoding="utf-8"))
        tracks = run_sequence(dets, _tracker_config(args), args.video_id)
        out = args.out / "tracks" / f"{args.video_id}.txt"
        write_text_atomic(out, formats.write_mot_tracks(tracks))
        write_text_atomic(
            args.out / "track_summary.json",
            json.dumps([{"video_id": args.video_id, "tracks": len(tracks)}], indent=2)
            + "\n",
        )
        print(f"{args.video_id}: {len(tracks)} tracks -> {out}")
        return 0
    if args.dataset_root is None:
        raise ValidationError("track needs either --dets/--video-id or --dataset-root")
    cfg = _pipeline_config(args)
    summary = stage_track(cfg)
    print(json.dumps(summary))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    stage_export(_pipeline_config(args))
    return 0


def cmd_caption(args: argparse.Namespace) -> int:
    result = stage_caption(_pipeline_config(args))
    print(json.dumps(result))
    return 1 if result["failures"] else 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    print(json.dumps(stage_retrieve(_pipeline_config(args))))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    submission = formats.parse_submission(Path(args.pred).read_text(encoding="utf-8"))
    ground_truth = formats.parse_ground_truth(Path(args.gt).read_text(encoding="utf-8"))
    report = evaluate(submission, ground_truth, _metrics_config(args))
    base = Path(args.report)
    write_text_atomic(base.with_suffix(".txt"), report.to_text_table())
    write_text_atomic(base.with_suffix(".jsonl"), report.to_records())
    print(report.to_text_table(), end="")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    summary = run_pipeline(_pipeline_config(args))
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_make_fixture(args: argparse.Namespace) -> int:
    summary = make_fixture(args.out, seed=args.seed, n_frames=args.frames)
    print(json.dumps(summary, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundtrack",
        description="Track objects, caption the tracks, retrieve them by "
        "language query, and score the result.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="run the tracker over detection files")
    p.add_argument("--dets", default=None, help="single detection file (with --video-id)")
    p.add_argument("--video-id", default=None)
    p.add_argument("--dataset-root", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", default=None, help="tracker config JSON")
    p.add_argument("--import-tracks", type=Path, default=None,
                   help="reuse foreign MOT-format tracks instead of tracking")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("export", help="build clip manifests and overlay scripts")
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("caption", help="caption every exported clip")
    _add_dataset_flags(p)
    _add_backend_flags(p)
    p.add_argument("--prompt-file", default=None)
    p.set_defaults(func=cmd_caption)

    p = sub.add_parser("retrieve", help="rank tracks per query by caption similarity")
    _add_dataset_flags(p)
    _add_backend_flags(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--all-videos", action="store_true",
                   help="retrieve across all videos, not just the query's own")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("evaluate", help="score a submission against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", required=True, help="report base path (.txt/.jsonl)")
    p.add_argument("--alpha-grid", default=None, help="comma-separated thresholds")
    p.add_argument("--unranked-set", action="store_true")
    p.add_argument("--miou-all-ranks", action="store_true")
    p.add_argument("--pooled", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run all stages end to end")
    _add_dataset_flags(p)
    _add_backend_flags(p)
    p.add_argument("--config", default=None, help="tracker config JSON")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--all-videos", action="store_true")
    p.add_argument("--prompt-file", default=None)
    p.add_argument("--import-tracks", type=Path, default=None)
    p.add_argument("--alpha-grid", default=None)
    p.add_argument("--unranked-set", action="store_true")
    p.add_argument("--miou-all-ranks", action="store_true")
    p.add_argument("--pooled", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("make-fixture", help="generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--frames", type=int, default=40)
    p.set_defaults(func=cmd_make_fixture)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
