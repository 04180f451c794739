"""
Dual encoders.

• base.DualEncoder         – the contract prompts are learned against
• mock.MockDualEncoder     – deterministic desk-scale stand-in
• external.OpenClipEncoder – pretrained open_clip adapter (optional)
"""
from __future__ import annotations

import torch

from openfer.errors import ConfigError

from .base import DualEncoder
from .mock import MockDualEncoder

__all__ = ["DualEncoder", "MockDualEncoder", "build_encoder"]


def build_encoder(section, frame_shape: tuple[int, int, int], cache_dir=None) -> DualEncoder:
    """Instantiate the encoder named by ``config.encoder.kind``."""
    if section.kind == "external":
        from .external import OpenClipEncoder

        if frame_shape[1] != frame_shape[2]:
            raise ConfigError(f"external encoder needs square frames, got {frame_shape}")
        return OpenClipEncoder(section.model_name, section.weights, frame_shape[1], cache_dir)
    return MockDualEncoder(
        embed_dim=section.embed_dim, token_dim=section.token_dim, frame_shape=tuple(frame_shape),
        pool=section.pool, logit_scale=section.logit_scale,
        position_encoding=section.position_encoding, seed=section.seed,
        dtype=getattr(torch, section.dtype),
    )
