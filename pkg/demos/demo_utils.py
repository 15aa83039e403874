"""Shared plumbing for the demo scripts: dataset synthesis and one cached training run."""

from pathlib import Path

from leakseg import (DatasetSplit, RunConfig, SegmentationModel, SynthSpec,
                     ingest_dataset, synth_generate, train)

OUTPUT = Path(__file__).resolve().parent / "output"

RESOLUTION = (64, 64)

DEMO_CONFIG = dict(
    resolution=RESOLUTION,
    batch_size=6,
    epochs=30,
    lr_initial=2e-3,
    lr_final=2e-4,
    clip_length=3,
    center_index=1,
    seed=1,
    c_v=16,
    c_t=32,
    groups=4,
    decoder_width=32,
)


def make_mixed_training_set(root: Path) -> Path:
    """Four leak videos plus two clean non-leak videos, 8 frames each."""
    if root.exists() and any(root.iterdir()):
        return root
    synth_generate(
        SynthSpec(seed=101, n_videos=4, frames_per_video=8, resolution=RESOLUTION,
                  leak_probability=1.0),
        root / "_leak",
    )
    synth_generate(
        SynthSpec(seed=202, n_videos=2, frames_per_video=8, resolution=RESOLUTION,
                  leak_probability=0.0, distractors=False),
        root / "_clean",
    )
    for src, prefix in ((root / "_leak", "leak"), (root / "_clean", "clean")):
        for vdir in sorted(src.iterdir()):
            vdir.rename(root / f"{prefix}_{vdir.name}")
        src.rmdir()
    return root


def trained_model():
    """Train once (200 steps, ~30 s CPU) and cache the checkpoint under demos/output."""
    root = make_mixed_training_set(OUTPUT / "train_data")
    dataset = ingest_dataset(root, RESOLUTION)
    cfg = RunConfig(**DEMO_CONFIG)
    split = DatasetSplit(name="all", train=list(dataset.frames()), test=[])
    ckpt = OUTPUT / "train_run" / "last.npz"
    if not ckpt.exists():
        print("training a fresh model (200 steps on the synthetic set)...")
        train(cfg, dataset, split, OUTPUT / "train_run", max_steps=200)
    model = SegmentationModel.load(ckpt)
    return model, cfg, dataset, split
