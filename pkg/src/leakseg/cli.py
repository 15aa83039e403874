"""Command-line interface: train / infer / eval / split / synth / sweep-kernel."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, load_config, resolve_out
from .data import (DatasetSplit, Fold, IngestionError, fewshot_split,
                   ingest_dataset, kfold_split, load_split, save_split)
from .layers import CheckpointError
from .model import SegmentationModel
from .synth import SynthSpec, synth_generate
from .training import TrainingError, train


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--resolution", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr-initial", type=float, dest="lr_initial")
    p.add_argument("--lr-final", type=float, dest="lr_final")
    p.add_argument("--lr-decay-start-fraction", type=float, dest="lr_decay_start_fraction")
    p.add_argument("--clip-length", type=int, dest="clip_length")
    p.add_argument("--center-index", type=int, dest="center_index")
    p.add_argument("--prompts", type=str, help="';'-separated prompt strings")
    p.add_argument("--seed", type=int)
    p.add_argument("--vlf", dest="use_vlf", action="store_true", default=None)
    p.add_argument("--no-vlf", dest="use_vlf", action="store_false", default=None)
    p.add_argument("--postproc", dest="postproc", action="store_true", default=None)
    p.add_argument("--no-postproc", dest="postproc", action="store_false", default=None)
    p.add_argument("--kernel", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--encoder", choices=["reference", "external"])
    p.add_argument("--c-v", type=int, dest="c_v")
    p.add_argument("--c-t", type=int, dest="c_t")
    p.add_argument("--groups", type=int)
    p.add_argument("--decoder-width", type=int, dest="decoder_width")


_CONFIG_KEYS = (
    "resolution", "batch_size", "epochs", "lr_initial", "lr_final",
    "lr_decay_start_fraction", "clip_length", "center_index", "prompts", "seed",
    "use_vlf", "postproc", "kernel", "threshold", "encoder", "c_v", "c_t",
    "groups", "decoder_width",
)


def _config_from_args(args) -> "RunConfig":
    overrides = {}
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key == "prompts":
            val = tuple(p.strip() for p in val.split(";") if p.strip())
        elif key == "resolution":
            val = tuple(val)
        overrides[key] = val
    return load_config(getattr(args, "config", None), overrides)


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        seed=args.seed or 0,
        n_videos=args.videos,
        frames_per_video=args.frames,
        resolution=tuple(args.resolution or (64, 64)),
        leak_probability=args.leak_probability,
        distractors=args.distractors,
    )
    out = synth_generate(spec, resolve_out(args.out))
    print(f"wrote {spec.n_videos} videos x {spec.frames_per_video} frames to {out}")
    return 0


def _cmd_split(args) -> int:
    cfg = _config_from_args(args)
    dataset = ingest_dataset(args.data, cfg.resolution)
    out = resolve_out(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kfold is not None:
        splits = kfold_split(dataset, args.kfold)
        for split in splits:
            save_split(split, out / f"{split.name}.split")
        weights = ", ".join(f"{f.weight:.4f}" for f in splits[0].folds)
        print(f"wrote {len(splits)} fold splits to {out} (weights: {weights})")
    else:
        split = fewshot_split(dataset, args.cap)
        save_split(split, out / f"{split.name}.split")
        print(
            f"wrote {split.name}.split: {len(split.train)} train / {len(split.test)} test frames"
        )
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    dataset = ingest_dataset(args.data, cfg.resolution)
    if args.split is not None:
        split = load_split(args.split)
    elif args.fewshot_cap is not None:
        split = fewshot_split(dataset, args.fewshot_cap)
    else:
        split = DatasetSplit(name="all", train=list(dataset.frames()), test=[])
    result = train(cfg, dataset, split, resolve_out(args.out), max_steps=args.max_steps)
    print(
        f"trained {result.steps} steps; best epoch {result.best_epoch}; "
        f"checkpoint {result.checkpoint}"
    )
    return 0


def _cmd_infer(args) -> int:
    cfg = _config_from_args(args)
    model = SegmentationModel.load(args.checkpoint)
    if args.resolution is None:
        # adopt the checkpoint's resolution unless explicitly overridden
        cfg = dataclasses.replace(cfg, resolution=tuple(model.resolution))
    dataset = ingest_dataset(args.data, cfg.resolution)
    from .inference import infer as run_infer

    out = run_infer(model, dataset, cfg, resolve_out(args.out),
                    debug_correlation=args.dump_correlation)
    print(f"wrote masks for {dataset.n_frames} frames to {out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    dataset = ingest_dataset(args.data, cfg.resolution)
    from . import metrics
    from .inference import evaluate_predictions, write_report

    frames = None
    folds = None
    if args.split is not None:
        split = load_split(args.split)
        frames = split.test or None
    if args.folds is not None:
        fold_splits = [load_split(p) for p in args.folds]
        total = sum(len(s.test) for s in fold_splits)
        folds = [Fold(videos=sorted({v for v, _ in s.test}), weight=len(s.test) / total)
                 for s in fold_splits]
    results = evaluate_predictions(args.pred, dataset, frames)
    for protocol in args.protocol:
        report = metrics.aggregate(results, protocol, folds=folds)
        txt, _ = write_report(report, resolve_out(args.out) / protocol)
        j, f, jf = report.overall
        print(f"{protocol}: J={j:.2f} F={f:.2f} J&F={jf:.2f} -> {txt}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    model = SegmentationModel.load(args.checkpoint)
    dataset = ingest_dataset(args.data, cfg.resolution)
    from .inference import sweep_kernel

    rows = sweep_kernel(model, dataset, cfg, args.kernels)
    out = resolve_out(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("kernel\tJ\tF\tJ&F\n")
        for k, j, f, jf in rows:
            fh.write(f"{k}\t{j:.2f}\t{f:.2f}\t{jf:.2f}\n")
            print(f"kernel={k:<3d} J={j:.2f} F={f:.2f} J&F={jf:.2f}")
    print(f"curve written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leakseg",
        description="Gas-leak video segmentation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--videos", type=int, default=4)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--resolution", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--leak-probability", type=float, default=1.0, dest="leak_probability")
    p.add_argument("--distractors", action="store_true", default=True)
    p.add_argument("--no-distractors", dest="distractors", action="store_false")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("split", help="write k-fold or few-shot split files")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--kfold", type=int)
    group.add_argument("--cap", type=int, help="few-shot per-video training frame cap")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", type=Path, help="split file; test frames are ignored")
    p.add_argument("--fewshot-cap", type=int, dest="fewshot_cap")
    p.add_argument("--max-steps", type=int, dest="max_steps")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="write predicted masks for a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-correlation", type=Path, dest="dump_correlation",
                   help="debug: dump normalized correlation slices here")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="score stored predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--protocol", nargs="+", default=["unified"],
                   choices=["unified", "per_video_confusion", "fold_weighted"])
    p.add_argument("--split", type=Path, help="restrict scoring to this split's test frames")
    p.add_argument("--folds", nargs="+", type=Path,
                   help="fold split files for fold_weighted aggregation")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep-kernel", help="J/F curve over opening kernel sizes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kernels", nargs="+", type=int, default=[1, 3, 5, 9, 13, 21])
    _add_config_flags(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


_ERROR_CATEGORIES = (
    (ConfigError, "config"),
    (IngestionError, "ingestion"),
    (CheckpointError, "checkpoint"),
    (TrainingError, "training"),
    (FileNotFoundError, "missing-file"),
    (ValueError, "invalid-input"),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # categorized nonzero exit
        for klass, label in _ERROR_CATEGORIES:
            if isinstance(exc, klass):
                print(f"error[{label}]: {exc}", file=sys.stderr)
                return 1
        print(f"error[internal]: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
