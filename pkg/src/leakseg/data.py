"""Dataset ingestion, clip windowing and train/test split construction.

Directory layout for ingestion::

    <root>/<video_id>/frames/000000.png   8-bit RGB
    <root>/<video_id>/masks/000000.png    8-bit single channel, 0/255

Split files are line-oriented text: a header line naming the split and
fold, then one ``video_id<TAB>frame_index`` per line.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgio


class IngestionError(RuntimeError):
    pass


@dataclass
class Frame:
    """One video frame at the working resolution, mask optional."""

    image: np.ndarray  # HxWx3 float64 in [0,1]
    mask: np.ndarray | None  # HxW uint8 in {0,1}
    video_id: str
    frame_index: int


@dataclass
class Clip:
    """A fixed-length window of frames from one video."""

    frames: list
    center_index: int

    def __post_init__(self):
        if not self.frames:
            raise ValueError("clip must contain at least one frame")
        if not 0 <= self.center_index < len(self.frames):
            raise ValueError("center_index outside clip")
        vids = {f.video_id for f in self.frames}
        if len(vids) != 1:
            raise ValueError(f"clip mixes videos: {sorted(vids)}")

    @property
    def center(self) -> Frame:
        return self.frames[self.center_index]


@dataclass
class Fold:
    videos: list
    weight: float


@dataclass
class DatasetSplit:
    name: str
    train: list  # (video_id, frame_index)
    test: list
    folds: list | None = None
    fold_index: int | None = None


@dataclass
class _VideoEntry:
    video_id: str
    indices: list
    frame_paths: dict = field(default_factory=dict)
    mask_paths: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.indices)


def natural_key(video_id: str):
    """Sort key treating digit runs numerically ('2' < '10', '2' < '2_human')."""
    return tuple(
        (0, int(p), "") if p.isdigit() else (1, 0, p)
        for p in re.split(r"(\d+)", str(video_id))
        if p
    )


class Dataset:
    """Read-only handle over an ingested (or synthetic in-memory) dataset."""

    def __init__(self, resolution, videos, root=None):
        self.resolution = tuple(resolution)
        self.videos = sorted(videos, key=lambda v: natural_key(v.video_id))
        self.root = root
        self._by_id = {v.video_id: v for v in self.videos}

    @classmethod
    def from_frame_counts(cls, counts: dict, resolution=(352, 352)) -> "Dataset":
        """Index-only handle from {video_id: frame_count}; frames are not loadable."""
        videos = [_VideoEntry(vid, list(range(n))) for vid, n in counts.items()]
        return cls(resolution, videos)

    @property
    def n_videos(self) -> int:
        return len(self.videos)

    @property
    def n_frames(self) -> int:
        return sum(len(v) for v in self.videos)

    def video(self, video_id: str) -> _VideoEntry:
        return self._by_id[video_id]

    def frames(self):
        """All (video_id, frame_index) pairs in video order."""
        for v in self.videos:
            for idx in v.indices:
                yield v.video_id, idx

    def load_frame(self, video_id: str, frame_index: int) -> Frame:
        entry = self._by_id[video_id]
        fpath = entry.frame_paths.get(frame_index)
        if fpath is None:
            raise IngestionError(f"{video_id}/{frame_index}: no frame file recorded for this handle")
        image = imgio.read_image(fpath, self.resolution)
        mpath = entry.mask_paths.get(frame_index)
        mask = imgio.read_mask(mpath, self.resolution) if mpath is not None else None
        return Frame(image=image, mask=mask, video_id=video_id, frame_index=frame_index)


_FRAME_PATTERN = re.compile(r"^(\d+)\.png$")


def ingest_dataset(root, resolution) -> Dataset:
    """Scan a dataset directory into a handle; every frame must have a mask.

    Frames are ordered by numeric filename within each video and resized to
    `resolution` on access (bilinear for images, nearest for masks, masks
    binarized at 0.5).
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestionError(f"{root}: not a directory")
    resolution = tuple(int(r) for r in resolution)
    videos = []
    for vdir in sorted(p for p in root.iterdir() if p.is_dir()):
        frames_dir = vdir / "frames"
        masks_dir = vdir / "masks"
        if not frames_dir.is_dir():
            raise IngestionError(f"{vdir.name}: missing frames/ directory")
        numbered = []
        for f in sorted(frames_dir.iterdir()):
            m = _FRAME_PATTERN.match(f.name)
            if m is None:
                raise IngestionError(f"{vdir.name}/frames/{f.name}: not a numeric .png filename")
            numbered.append((int(m.group(1)), f))
        numbered.sort(key=lambda t: t[0])
        indices = [n for n, _ in numbered]
        if len(set(indices)) != len(indices):
            raise IngestionError(f"{vdir.name}: non-monotonic frame numbering (duplicate indices)")
        entry = _VideoEntry(vdir.name, indices)
        for idx, fpath in numbered:
            mpath = masks_dir / fpath.name
            if not mpath.is_file():
                raise IngestionError(f"{vdir.name}/frames/{fpath.name}: missing mask file {mpath}")
            entry.frame_paths[idx] = fpath
            entry.mask_paths[idx] = mpath
        videos.append(entry)
    if not videos:
        raise IngestionError(f"{root}: no video directories found")
    # fail fast on unreadable files: parse every image header up front
    from PIL import Image

    for entry in videos:
        for idx in entry.indices:
            for path in (entry.frame_paths[idx], entry.mask_paths[idx]):
                try:
                    with Image.open(path) as im:
                        im.size
                except Exception as exc:
                    raise IngestionError(f"{entry.video_id}: unreadable image {path}: {exc}") from exc
    return Dataset(resolution, videos, root=root)


def clip_frame_positions(n_frames: int, j: int, t: int, center_index: int) -> list:
    """Positions of the length-`t` window centered near `j`, clamped to the video."""
    if t < 1:
        raise ValueError("clip length must be >= 1")
    if not 0 <= center_index < t:
        raise ValueError("center_index must be valid for the clip length")
    start = j - center_index
    return [min(max(start + k, 0), n_frames - 1) for k in range(t)]


def make_clips(dataset: Dataset, t: int, center_index: int, frames=None):
    """Yield one Clip per dataset frame (or per (video, index) in `frames`).

    Out-of-range neighbors at video boundaries are clamped to the nearest
    valid frame, so the first frame is its own predecessor and the last its
    own successor.
    """
    wanted = None
    if frames is not None:
        wanted = {}
        for vid, idx in frames:
            wanted.setdefault(vid, set()).add(idx)
    for video in dataset.videos:
        if len(video) == 0:
            warnings.warn(f"video {video.video_id} has no frames; skipped")
            continue
        if wanted is not None and video.video_id not in wanted:
            continue
        n = len(video)
        for pos, idx in enumerate(video.indices):
            if wanted is not None and idx not in wanted[video.video_id]:
                continue
            positions = clip_frame_positions(n, pos, t, center_index)
            frames_loaded = [dataset.load_frame(video.video_id, video.indices[p]) for p in positions]
            yield Clip(frames=frames_loaded, center_index=center_index)


def kfold_split(dataset: Dataset, k: int) -> list:
    """Partition videos into k sequential groups; one split per held-out group.

    Videos are ordered by natural-sorted id; fold weight is the held-out
    group's share of the total frame count.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if dataset.n_videos < k:
        raise ValueError(f"cannot make {k} folds from {dataset.n_videos} videos")
    videos = dataset.videos
    total_frames = dataset.n_frames
    base, extra = divmod(len(videos), k)
    groups = []
    cursor = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        groups.append(videos[cursor : cursor + size])
        cursor += size
    folds = [
        Fold(
            videos=[v.video_id for v in grp],
            weight=sum(len(v) for v in grp) / total_frames,
        )
        for grp in groups
    ]
    splits = []
    for i, grp in enumerate(groups):
        test_ids = {v.video_id for v in grp}
        train, test = [], []
        for v in videos:
            target = test if v.video_id in test_ids else train
            target.extend((v.video_id, idx) for idx in v.indices)
        splits.append(
            DatasetSplit(name=f"fold{i + 1}", train=train, test=test, folds=folds, fold_index=i)
        )
    return splits


def fewshot_split(dataset: Dataset, cap: int) -> DatasetSplit:
    """Per video, pick `cap` frames by uniform stride for training; rest test.

    Selected positions are round(i*(N-1)/(cap-1)) for i=0..cap-1, deduplicated.
    Videos with <= cap frames contribute everything to training (warned).
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    train, test = [], []
    for video in dataset.videos:
        n = len(video)
        if n == 0:
            warnings.warn(f"video {video.video_id} has no frames; skipped")
            continue
        if n <= cap:
            warnings.warn(
                f"video {video.video_id} has only {n} frames (<= cap {cap}); all go to training"
            )
            train.extend((video.video_id, idx) for idx in video.indices)
            continue
        if cap == 1:
            positions = {0}
        else:
            positions = {int(round(i * (n - 1) / (cap - 1))) for i in range(cap)}
        for pos, idx in enumerate(video.indices):
            (train if pos in positions else test).append((video.video_id, idx))
    return DatasetSplit(name=f"fewshot{cap}", train=train, test=test)


def save_split(split: DatasetSplit, path):
    """Write the split as header + one 'video_id<TAB>frame_index' line per frame."""
    path = Path(path)
    fold = split.fold_index + 1 if split.fold_index is not None else "-"
    lines = [f"# split={split.name} fold={fold}"]
    for section, pairs in (("train", split.train), ("test", split.test)):
        lines.append(f"# section={section}")
        lines.extend(f"{vid}\t{idx}" for vid, idx in pairs)
    path.write_text("\n".join(lines) + "\n")


def load_split(path) -> DatasetSplit:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# split="):
        raise ValueError(f"{path}: missing split header line")
    header = dict(part.split("=", 1) for part in lines[0][2:].split())
    fold_index = None if header.get("fold", "-") == "-" else int(header["fold"]) - 1
    sections = {"train": [], "test": []}
    current = None
    for line in lines[1:]:
        if not line.strip():
            continue
        if line.startswith("# section="):
            current = line.split("=", 1)[1].strip()
            continue
        if current not in sections:
            raise ValueError(f"{path}: frame line outside a section: {line!r}")
        vid, idx = line.split("\t")
        sections[current].append((vid, int(idx)))
    return DatasetSplit(
        name=header["split"],
        train=sections["train"],
        test=sections["test"],
        fold_index=fold_index,
    )
