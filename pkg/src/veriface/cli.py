"""Command line interface.

Subcommands: train, evaluate, audit, analyze-landmarks, synth.
Exit codes: 0 ok, 2 validation/config error, 3 I/O or model-file error,
4 training error, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import model_io, pipeline
from .config import RunConfig, load_config
from .dft import DftSelector, export_cost_table
from .errors import VerifaceError
from .manifest import load_manifest
from .synthetic import make_synthetic_dataset


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    return config


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_train(args) -> int:
    config = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    model = pipeline.train_detector(manifest, config, threads=args.threads)
    model_io.save_model(model, args.model)
    report = pipeline.audit_parameters(model)
    print(report.format_table())
    print(f"model written to {args.model}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "parameter_report.tsv"),
               "subsystem\tunits\tparameters\n"
               + "".join(f"{n}\t{u}\t{c}\n" for n, u, c in report.rows())
               + f"total\t\t{report.total}\n")
        for s, selector in enumerate(model.selectors):
            if isinstance(selector, DftSelector):
                schema = model.feature_schema[s]
                name = f"dft_costs_block{s}_{schema.kind}_{schema.ident}.tsv"
                _write(os.path.join(args.out, name), export_cost_table(selector))
    return 0


def cmd_evaluate(args) -> int:
    model = model_io.load_model(args.model)
    manifest = load_manifest(args.manifest)
    result = pipeline.evaluate_manifest(model, manifest, threads=args.threads)

    def show(value):
        return "undefined (needs both classes)" if value is None else f"{value:.6f}"

    print(f"frame-level AUC: {show(result['frame_auc'])}")
    print(f"video-level AUC: {show(result['video_auc'])}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        frame_lines = ["video_id\tframe_index\tlabel\tscore"]
        for rec, score in zip(manifest.records, result["frame_scores"]):
            frame_lines.append(f"{rec.video_id}\t{rec.frame_index}\t{rec.label}"
                               f"\t{float(score)!r}")
        _write(os.path.join(args.out, "frames.tsv"), "\n".join(frame_lines) + "\n")
        video_lines = ["video_id\tlabel\tscore"]
        for vid, label, score in result["videos"]:
            video_lines.append(f"{vid}\t{label}\t{score!r}")
        _write(os.path.join(args.out, "videos.tsv"), "\n".join(video_lines) + "\n")
        _write(os.path.join(args.out, "summary.tsv"),
               "metric\tvalue\n"
               f"frame_auc\t{result['frame_auc']!r}\n"
               f"video_auc\t{result['video_auc']!r}\n")
    return 0


def cmd_audit(args) -> int:
    model = model_io.load_model(args.model)
    print(pipeline.audit_parameters(model).format_table())
    return 0


def cmd_analyze_landmarks(args) -> int:
    config = _load_run_config(args)
    train_manifest = load_manifest(args.manifest)
    test_manifest = load_manifest(args.test_manifest)
    aucs = pipeline.landmark_discriminability(train_manifest, test_manifest,
                                              config, threads=args.threads)
    lines = ["landmark_index\tauc"]
    lines.extend(f"{i}\t{float(auc)!r}" for i, auc in enumerate(aucs))
    _write(args.out, "\n".join(lines) + "\n")
    best = int(np.argmax(aucs))
    print(f"per-landmark AUC table written to {args.out}")
    print(f"most discriminant landmark: {best} (AUC {aucs[best]:.4f})")
    return 0


def cmd_synth(args) -> int:
    train_path, test_path = make_synthetic_dataset(
        args.out, n_videos=args.videos, frames_per_video=args.frames,
        image_size=args.image_size, seed=args.seed if args.seed is not None else 0)
    print(f"train manifest: {train_path}")
    print(f"test manifest: {test_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veriface",
        description="Lightweight fake-face detector: train, evaluate, audit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for frame preprocessing")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")

    p = sub.add_parser("train", help="fit a detector from a train manifest")
    p.add_argument("--manifest", required=True, help="train manifest path")
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--out", help="directory for diagnostic reports")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a manifest with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="directory for score/AUC reports")
    common(p, seed=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("audit", help="print the parameter report of a model")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_audit, threads=1)

    p = sub.add_parser("analyze-landmarks",
                       help="test AUC of a single-block detector per landmark")
    p.add_argument("--manifest", required=True, help="train manifest path")
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--out", required=True, help="output TSV path")
    common(p)
    p.set_defaults(func=cmd_analyze_landmarks)

    p = sub.add_parser("synth", help="generate the synthetic benchmark dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--videos", type=int, default=200)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--image-size", type=int, default=160)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerifaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
