"""
Openness-based known/unknown partitions.

``O(K:U) = 1 - sqrt(K / (K + U))``.  Each `OpennessSplit` is one random
division of the classes; `apply_split` turns a dataset into a known-only
training set and a test set where every unknown-class video carries the
sentinel label ``K``.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from openfer.errors import ProtocolError, SchemaError
from openfer.ingest.dataset import UNKNOWN, Dataset

_log = logging.getLogger(__name__)


def openness(K: int, U: int) -> float:
    if K < 1:
        raise ProtocolError(f"openness needs K >= 1, got K={K}")
    if U < 0:
        raise ProtocolError(f"openness needs U >= 0, got U={U}")
    return 1.0 - math.sqrt(K / (K + U))


@dataclass(frozen=True)
class OpennessSplit:
    known_classes: tuple[int, ...]
    unknown_classes: tuple[int, ...]
    seed: int
    openness: float

    def __post_init__(self):
        object.__setattr__(self, "known_classes", tuple(int(c) for c in self.known_classes))
        object.__setattr__(self, "unknown_classes", tuple(int(c) for c in self.unknown_classes))
        if set(self.known_classes) & set(self.unknown_classes):
            raise ProtocolError("known and unknown classes overlap")
        if len(set(self.known_classes)) != len(self.known_classes):
            raise ProtocolError("duplicate known class")
        if self.K < 2 or self.U < 1:
            raise ProtocolError(f"split needs K >= 2 and U >= 1, got K={self.K}, U={self.U}")
        if self.openness != openness(self.K, self.U):
            raise ProtocolError(
                f"openness field {self.openness} != O({self.K}:{self.U})={openness(self.K, self.U)}")

    @property
    def K(self) -> int:
        return len(self.known_classes)

    @property
    def U(self) -> int:
        return len(self.unknown_classes)

    @classmethod
    def of(cls, known, unknown, seed: int) -> "OpennessSplit":
        return cls(tuple(known), tuple(unknown), seed, openness(len(known), len(unknown)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["known_classes"] = list(self.known_classes)
        d["unknown_classes"] = list(self.unknown_classes)
        return d


def generate_splits(class_count: int, known_count: int, repeats: int, seed: int,
                    unknown_count: int | None = None) -> list[OpennessSplit]:
    """
    ``repeats`` random divisions; repeat ``r`` draws from a generator seeded by
    ``(seed, r)``.  Splits are pairwise distinct while enough combinations
    remain.  ``unknown_count`` defaults to every remaining class.
    """
    if known_count < 2 or known_count >= class_count:
        raise ProtocolError(
            f"need 2 <= known_count < class_count, got known={known_count}, classes={class_count}")
    if repeats < 1:
        raise ProtocolError(f"repeats must be >= 1, got {repeats}")
    U = class_count - known_count if unknown_count is None else unknown_count
    if U < 1 or known_count + U > class_count:
        raise ProtocolError(f"cannot draw K={known_count}, U={U} from {class_count} classes")

    possible = math.comb(class_count, known_count) * math.comb(class_count - known_count, U)
    if repeats > possible:
        _log.warning("only %d distinct K=%d/U=%d divisions exist; %d requested, some repeat",
                     possible, known_count, U, repeats)
    seen: set[tuple] = set()
    splits = []
    for r in range(repeats):
        for attempt in itertools.count():
            rng = np.random.default_rng([seed, r, attempt])
            perm = rng.permutation(class_count)
            known = tuple(sorted(int(c) for c in perm[:known_count]))
            unknown = tuple(sorted(int(c) for c in perm[known_count:known_count + U]))
            if (known, unknown) not in seen or len(seen) >= possible:
                break
        seen.add((known, unknown))
        splits.append(OpennessSplit.of(known, unknown, seed * 1000 + r))
    return splits


def _holdout(indices: list[int], fraction: float, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """(kept, held) with at least one on each side when there are two or more."""
    idx = list(indices)
    rng.shuffle(idx)
    n_held = round(len(idx) * fraction)
    if n_held == 0 and len(idx) >= 2:
        n_held = 1
    if n_held == len(idx) and len(idx) >= 2:
        n_held = len(idx) - 1
    return sorted(idx[n_held:]), sorted(idx[:n_held])


def stratified_holdout(labels: list[int], fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Per-class seeded split of positions into (kept, held)."""
    by_class: dict[int, list[int]] = {}
    for i, y in enumerate(labels):
        by_class.setdefault(y, []).append(i)
    kept, held = [], []
    for y in sorted(by_class):
        k, h = _holdout(by_class[y], fraction, np.random.default_rng([seed, y]))
        kept += k
        held += h
    return sorted(kept), sorted(held)


def apply_split(dataset: Dataset, split: OpennessSplit,
                test_fraction: float = 0.2) -> tuple[Dataset, Dataset]:
    """
    Returns ``(train, test)``.  Train holds known classes only, relabelled
    0..K-1 in ``split.known_classes`` order.  Test holds the remaining known
    videos plus every unknown-class video, the latter labelled ``K``.
    Manifest train/test tags win; untagged known videos go through a seeded
    per-class 80/20 split.
    """
    n = len(dataset.class_names)
    for c in split.known_classes + split.unknown_classes:
        if not 0 <= c < n:
            raise ProtocolError(f"split class {c} outside dataset's {n} classes")
    K = split.K
    remap = {c: i for i, c in enumerate(split.known_classes)}
    unknown = set(split.unknown_classes)

    counts = dataset.class_counts()
    empty = [dataset.class_names[c] for c in split.known_classes if counts[c] == 0]
    if empty:
        raise ProtocolError(f"known class(es) without samples: {empty}")

    train, test, untagged = [], [], []
    for i, s in enumerate(dataset.samples):
        if s.label in unknown:
            test.append(s.relabel(K))
        elif s.label in remap:
            if s.tag == "train":
                train.append(s.relabel(remap[s.label]))
            elif s.tag == "test":
                test.append(s.relabel(remap[s.label]))
            else:
                untagged.append(i)

    if untagged:
        if len(untagged) == len(dataset):
            _log.warning("no train/test tags; using a seeded %d/%d per-class split",
                         round(100 * (1 - test_fraction)), round(100 * test_fraction))
        labels = [dataset.samples[i].label for i in untagged]
        kept, held = stratified_holdout(labels, test_fraction, split.seed)
        train += [dataset.samples[untagged[p]].relabel(remap[labels[p]]) for p in kept]
        test += [dataset.samples[untagged[p]].relabel(remap[labels[p]]) for p in held]

    known_names = [dataset.class_names[c] for c in split.known_classes]
    if UNKNOWN in known_names:
        raise SchemaError(f"class name {UNKNOWN!r} is reserved for the unknown sentinel")
    meta = {"split": split.to_dict()}
    return (Dataset(train, known_names, dataset.frame_shape, meta),
            Dataset(test, known_names + [UNKNOWN], dataset.frame_shape, meta))


def save_split(split: OpennessSplit, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(split.to_dict(), indent=2), encoding="utf-8")
    return path


def load_split(path: str | Path) -> OpennessSplit:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return OpennessSplit(tuple(raw["known_classes"]), tuple(raw["unknown_classes"]),
                         int(raw["seed"]), float(raw["openness"]))
