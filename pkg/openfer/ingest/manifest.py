"""
Manifest Ingester
-----------------

Reads a line-oriented UTF-8 manifest of pre-extracted, face-cropped frames::

    #classes: anger,happiness
    clip_001<TAB>frames/clip_001<TAB>anger<TAB>train
    clip_002<TAB>frames/clip_002<TAB>happiness<TAB>-

Behaviour
~~~~~~~~~
• ``frames_dir`` may be relative; it resolves against the manifest's folder.
• Frame files inside a directory are read in lexicographic order.
• Frames are decoded concurrently but samples keep manifest order.
• Row indices in errors are 0-based over data rows (the header is not counted).

`write_dataset` is the inverse: PNG frames + a manifest in the same format,
so synthetic data can be re-ingested.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from openfer.errors import IngestionError, SchemaError
from openfer.ingest.dataset import Dataset, VideoSample

_log = logging.getLogger(__name__)

HEADER = "#classes:"
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}
_TAGS = {"train": "train", "test": "test", "-": None}


def _read_frame(fp: Path) -> np.ndarray:
    with Image.open(fp) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)                      # C × H × W


def _read_video(frame_dir: Path) -> torch.Tensor:
    files = sorted(p for p in frame_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise IngestionError(f"no image frames in {frame_dir}", path=frame_dir)
    return torch.from_numpy(np.stack([_read_frame(f) for f in files]))


def _parse(path: Path) -> tuple[list[str], list[tuple[int, str, Path, str, str | None]]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(HEADER):
        raise SchemaError(f"{path}: first line must start with {HEADER!r}")
    classes = [c.strip() for c in lines[0][len(HEADER):].split(",") if c.strip()]
    rows = []
    for row, line in enumerate(l for l in lines[1:] if l.strip()):
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 4:
            raise SchemaError(f"{path}: row {row} has {len(cols)} columns, expected 4", row=row)
        sample_id, frames_dir, class_name, tag = (c.strip() for c in cols)
        if class_name not in classes:
            raise SchemaError(
                f"{path}: row {row} label {class_name!r} not in header classes {classes}", row=row)
        if tag not in _TAGS:
            raise SchemaError(f"{path}: row {row} split tag {tag!r} not in train|test|-", row=row)
        frame_dir = Path(frames_dir)
        if not frame_dir.is_absolute():
            frame_dir = path.parent / frame_dir
        if not frame_dir.is_dir():
            raise IngestionError(
                f"{path}: row {row} frames directory not found: {frame_dir}", path=frame_dir, row=row)
        rows.append((row, sample_id, frame_dir, class_name, _TAGS[tag]))
    return classes, rows


def load_manifest(path: str | Path, workers: int = 4) -> Dataset:
    """
    Parameters
    ----------
    path : manifest file (format in the module docstring)
    workers : frame-decoding threads; results are re-assembled in manifest order

    Returns
    -------
    Dataset whose samples preserve manifest order.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"manifest not found: {path}", path=path)
    classes, rows = _parse(path)
    index = {c: i for i, c in enumerate(classes)}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        videos = list(pool.map(lambda r: _read_video(r[2]), rows))

    samples = [
        VideoSample(sample_id, frames, index[class_name], str(path), tag)
        for (_, sample_id, _, class_name, tag), frames in zip(rows, videos)
    ]
    shape = samples[0].frame_shape if samples else (3, 0, 0)
    _log.info("loaded %d videos over %d classes from %s", len(samples), len(classes), path)
    return Dataset(samples, classes, shape, {"manifest": str(path)})


def write_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """PNG frames under ``out_dir/frames/<id>/`` plus ``out_dir/manifest.tsv``."""
    out_dir = Path(out_dir)
    lines = [HEADER + " " + ",".join(dataset.class_names)]
    for s in dataset:
        fdir = out_dir / "frames" / s.id
        fdir.mkdir(parents=True, exist_ok=True)
        for q, frame in enumerate(s.frames):
            arr = (frame.clamp(0, 1).permute(1, 2, 0).numpy() * 255.0).round().astype(np.uint8)
            if arr.shape[2] == 1:
                arr = arr[:, :, 0]
            Image.fromarray(arr).save(fdir / f"{q:05d}.png")
        tag = s.tag or "-"
        lines.append(f"{s.id}\t{fdir.relative_to(out_dir).as_posix()}\t{dataset.class_names[s.label]}\t{tag}")
    manifest = out_dir / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
