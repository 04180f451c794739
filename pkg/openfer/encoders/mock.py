"""
Deterministic differentiable mock dual encoder.

text   : tokens ⊙ (1 + ½·sinusoidal position code), mean over positions,
         fixed random linear map token_dim → embed_dim
visual : subtract the input mean (0.5), pool×pool average pooling (the pooled
         grid is the spatial feature map), fixed random linear map → embed_dim
tokens : whitespace words hashed (SHA-256) into unit-variance vectors

Everything derives from ``seed`` through torch.Generator, so two encoders
built with the same arguments hold bit-identical constants.
"""
from __future__ import annotations

import hashlib
import math

import torch
import torch.nn.functional as F

from openfer.encoders.base import DualEncoder
from openfer.errors import ContractError

INPUT_MEAN = 0.5


def _positional(length: int, width: int, dtype) -> torch.Tensor:
    pos = torch.arange(length, dtype=dtype).unsqueeze(1)
    i = torch.arange(0, width, 2, dtype=dtype)
    freq = torch.exp(-math.log(10_000.0) * i / width)
    pe = torch.zeros(length, width, dtype=dtype)
    pe[:, 0::2] = torch.sin(pos * freq)
    pe[:, 1::2] = torch.cos(pos * freq)[:, : width // 2]
    return pe


class MockDualEncoder(DualEncoder):

    def __init__(self, embed_dim: int = 32, token_dim: int = 64,
                 frame_shape: tuple[int, int, int] = (3, 64, 64), pool: int = 4,
                 logit_scale: float = 100.0, position_encoding: bool = True,
                 seed: int = 1234, dtype: torch.dtype = torch.float64):
        super().__init__()
        c, h, w = frame_shape
        if h % pool or w % pool:
            raise ContractError(f"frame side {h}×{w} not divisible by pool {pool}")
        self.embed_dim = embed_dim
        self.token_dim = token_dim
        self.frame_shape = (c, h, w)
        self.pool = pool
        self.logit_scale = float(logit_scale)
        self.position_encoding = position_encoding
        self.seed = seed
        self.dtype = dtype
        self.pixel_range = (0.0, 1.0)

        gen = torch.Generator().manual_seed(seed)
        fan_in = c * (h // pool) * (w // pool)
        self.register_buffer("w_text", torch.randn(embed_dim, token_dim, generator=gen, dtype=dtype)
                             / math.sqrt(token_dim))
        self.register_buffer("w_vis", torch.randn(embed_dim, fan_in, generator=gen, dtype=dtype)
                             / math.sqrt(fan_in) * pool)
        self.register_buffer("b_vis", 0.02 * torch.randn(embed_dim, generator=gen, dtype=dtype))

    # ── text ──────────────────────────────────────────────────────────────
    def tokenize(self, text: str) -> torch.Tensor:
        words = text.split()
        if not words:
            raise ContractError("cannot tokenize an empty string")
        rows = []
        for word in words:
            digest = hashlib.sha256(f"{self.seed}:{word}".encode("utf-8")).digest()
            gen = torch.Generator().manual_seed(int.from_bytes(digest[:8], "big") % (2**63 - 1))
            rows.append(torch.randn(self.token_dim, generator=gen, dtype=self.dtype))
        return torch.stack(rows)

    def _text(self, tokens: torch.Tensor) -> torch.Tensor:
        tokens = tokens.to(self.dtype)
        if self.position_encoding:
            tokens = tokens * (1.0 + 0.5 * _positional(tokens.shape[0], self.token_dim, self.dtype))
        return self.w_text @ tokens.mean(dim=0)

    # ── visual ────────────────────────────────────────────────────────────
    def _frames(self, frames: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        grid = F.avg_pool2d(frames - INPUT_MEAN, self.pool)
        emb = grid.flatten(1) @ self.w_vis.T + self.b_vis
        return emb, grid

    def cam_weights(self) -> torch.Tensor:
        c, h, w = self.frame_shape
        per_input = self.w_vis.mean(dim=0).view(c, h // self.pool, w // self.pool)
        return per_input.mean(dim=(1, 2))
