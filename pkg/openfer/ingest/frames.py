"""Uniform temporal frame sampling."""
from __future__ import annotations

import torch

from openfer.errors import ContractError
from openfer.ingest.dataset import VideoSample


def frame_indices(length: int, N: int) -> list[int]:
    """
    ``round(q * (length - 1) / (N - 1))`` for q = 0..N-1 (``[0]`` when N == 1).
    Videos shorter than N keep their frames in order and repeat the last one.
    """
    if N < 1:
        raise ContractError(f"N must be >= 1, got {N}")
    if length < 1:
        raise ContractError("cannot sample from an empty video")
    if N == 1:
        return [0]
    if length < N:
        return list(range(length)) + [length - 1] * (N - length)
    # round-half-up keeps the rule independent of banker's rounding
    return [int((2 * q * (length - 1) + (N - 1)) // (2 * (N - 1))) for q in range(N)]


def sample_frames(sample: VideoSample, N: int) -> torch.Tensor:
    """N × C × H × W view of ``sample.frames``."""
    return sample.frames[frame_indices(sample.frames.shape[0], N)]
