"""Resolve ``config.data`` into one in-memory `Dataset`."""
from __future__ import annotations

import logging

from openfer.ingest.dataset import Dataset, merge_datasets
from openfer.ingest.manifest import load_manifest
from openfer.ingest.synthetic import SyntheticSpec, synthesize_dataset

_log = logging.getLogger(__name__)


def synthetic_spec(section) -> SyntheticSpec:
    return SyntheticSpec(
        num_classes=section.num_classes, videos_per_class=section.videos_per_class,
        frames_per_video=section.frames_per_video, frame_shape=tuple(section.frame_shape),
        noise_level=section.noise_level, seed=section.seed,
    )


def load_source(config) -> Dataset:
    """Synthetic data, one manifest, or several manifests merged (fusion task)."""
    data = config.data
    if data.source == "synthetic":
        return synthesize_dataset(synthetic_spec(data.synthetic))
    datasets = [load_manifest(p) for p in data.manifests]
    if len(datasets) == 1:
        return datasets[0]
    _log.info("merging %d manifests", len(datasets))
    return merge_datasets(datasets)
