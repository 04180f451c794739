"""
Import-side effect free; just surface the data entry points.
"""
from .dataset import (
    BASIC_EMOTIONS, SINGLE_EMOTIONS, UNKNOWN, Dataset, VideoSample, merge_datasets,
)
from .frames import frame_indices, sample_frames
from .manifest import load_manifest, write_dataset
from .source import load_source, synthetic_spec
from .splits import (
    OpennessSplit, apply_split, generate_splits, load_split, openness, save_split,
    stratified_holdout,
)
from .synthetic import SyntheticSpec, min_signature_distance, synthesize_dataset

__all__ = [
    "BASIC_EMOTIONS", "SINGLE_EMOTIONS", "UNKNOWN", "Dataset", "VideoSample",
    "merge_datasets", "frame_indices", "sample_frames", "load_manifest",
    "write_dataset", "load_source", "synthetic_spec", "OpennessSplit", "apply_split", "generate_splits",
    "load_split", "openness", "save_split", "stratified_holdout",
    "SyntheticSpec", "min_signature_distance", "synthesize_dataset",
]
