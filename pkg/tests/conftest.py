"""Session fixtures: synthetic datasets and one shared 200-step training run."""

import time
from types import SimpleNamespace

import pytest

from leakseg.config import RunConfig
from leakseg.data import DatasetSplit, ingest_dataset
from leakseg.model import SegmentationModel
from leakseg.synth import SynthSpec, synth_generate
from leakseg.training import train

RESOLUTION = (64, 64)

# small-but-real widths: enough capacity to overfit the synthetic set in
# 200 steps while keeping the whole suite CPU-cheap
SMOKE_CONFIG = dict(
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


def make_train_root(root):
    """4 leak videos + 2 clean non-leak videos, 8 frames each, 64x64."""
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


@pytest.fixture(scope="session")
def train_bundle(tmp_path_factory):
    """Dataset + config + one 200-step training run shared across tests."""
    root = make_train_root(tmp_path_factory.mktemp("synth_train"))
    dataset = ingest_dataset(root, RESOLUTION)
    cfg = RunConfig(**SMOKE_CONFIG)
    split = DatasetSplit(name="all", train=list(dataset.frames()), test=[])
    out = tmp_path_factory.mktemp("train_out")
    started = time.monotonic()
    result = train(cfg, dataset, split, out, max_steps=200)
    train_time = time.monotonic() - started
    model = SegmentationModel.load(result.last_checkpoint)
    return SimpleNamespace(
        root=root,
        dataset=dataset,
        config=cfg,
        split=split,
        result=result,
        model=model,
        train_time=train_time,
    )


@pytest.fixture(scope="session")
def speck_dataset(tmp_path_factory):
    """Six non-leak videos carrying transient sub-kernel specks."""
    root = tmp_path_factory.mktemp("synth_specks")
    synth_generate(
        SynthSpec(seed=777, n_videos=6, frames_per_video=8, resolution=RESOLUTION,
                  leak_probability=0.0, distractors=True),
        root,
    )
    return ingest_dataset(root, RESOLUTION)


@pytest.fixture(scope="session")
def mixed_dataset(tmp_path_factory, train_bundle, speck_dataset):
    """Leak videos plus speck videos, for kernel-sweep shape checks."""
    import shutil

    root = tmp_path_factory.mktemp("synth_mixed")
    for vdir in train_bundle.root.iterdir():
        if vdir.is_dir() and vdir.name.startswith("leak"):
            shutil.copytree(vdir, root / vdir.name)
    for vdir in speck_dataset.root.iterdir():
        if vdir.is_dir():
            shutil.copytree(vdir, root / f"speck_{vdir.name}")
    return ingest_dataset(root, RESOLUTION)
