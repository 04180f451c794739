"""
Core data records: one labelled face-cropped video, and a dataset of them.

Labels are 0-based class indices.  After `apply_split` the test set uses the
sentinel label ``K`` (the number of known classes) for every unknown-class
video, and its ``class_names`` end with :data:`UNKNOWN`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import torch

from openfer.errors import ContractError, SchemaError

UNKNOWN = "unknown"

BASIC_EMOTIONS = (
    "anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral",
)
SINGLE_EMOTIONS = BASIC_EMOTIONS + (
    "contempt", "anxiety", "helplessness", "disappointment",
)


@dataclass(frozen=True, eq=False)
class VideoSample:
    id: str
    frames: torch.Tensor          # T × C × H × W
    label: int
    source: str = "synthetic"
    tag: str | None = None        # "train" | "test" | None

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[0] == 0:
            raise ContractError(
                f"sample {self.id}: frames must be a non-empty T×C×H×W tensor, "
                f"got shape {tuple(self.frames.shape)}")
        if not torch.isfinite(self.frames).all():
            raise ContractError(f"sample {self.id}: non-finite pixel values")
        if self.tag not in (None, "train", "test"):
            raise SchemaError(f"sample {self.id}: split tag {self.tag!r} not in train|test|-")

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return tuple(self.frames.shape[1:])

    def relabel(self, label: int) -> "VideoSample":
        return VideoSample(self.id, self.frames, label, self.source, self.tag)


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: tuple[VideoSample, ...]
    class_names: tuple[str, ...]
    frame_shape: tuple[int, int, int]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "frame_shape", tuple(self.frame_shape))
        if len(set(self.class_names)) != len(self.class_names):
            raise SchemaError(f"duplicate class names: {self.class_names}")
        for s in self.samples:
            if not 0 <= s.label < len(self.class_names):
                raise SchemaError(
                    f"sample {s.id}: label {s.label} outside {len(self.class_names)} classes")
            if s.frame_shape != self.frame_shape:
                raise SchemaError(
                    f"sample {s.id}: frame shape {s.frame_shape} != {self.frame_shape}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.samples]

    def subset(self, indices) -> "Dataset":
        return Dataset([self.samples[i] for i in indices], self.class_names,
                       self.frame_shape, dict(self.meta))

    def class_counts(self) -> dict[int, int]:
        counts = {k: 0 for k in range(len(self.class_names))}
        for s in self.samples:
            counts[s.label] += 1
        return counts


def merge_datasets(datasets: list[Dataset]) -> Dataset:
    """
    Union of several sources (the "fusion" task). Class lists merge in
    first-seen order and labels are remapped by class name; sample ids get a
    ``d<index>/`` prefix so they stay unique.
    """
    if not datasets:
        raise SchemaError("merge_datasets needs at least one dataset")
    shape = datasets[0].frame_shape
    names: list[str] = []
    for ds in datasets:
        if ds.frame_shape != shape:
            raise SchemaError(f"frame shape {ds.frame_shape} != {shape}; cannot merge")
        names.extend(n for n in ds.class_names if n not in names)
    index = {n: i for i, n in enumerate(names)}
    samples = [
        VideoSample(f"d{d}/{s.id}", s.frames, index[ds.class_names[s.label]], s.source, s.tag)
        for d, ds in enumerate(datasets) for s in ds
    ]
    return Dataset(samples, names, shape, {"merged_from": len(datasets)})
