"""
Visual prompts.

A video's expression-sensitive rectangle is the l×l window with the largest
summed CAM saliency on its *first* frame; the learnable patch is written into
that rectangle on every sampled frame.  Per-frame embeddings are mean-pooled
over time and L2-normalised.

The negative visual bank is K frame-sized learnable tensors, one per known
class, encoded by the same frozen visual branch.
"""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch
import torch.nn.functional as F

from openfer.encoders.base import DualEncoder
from openfer.errors import ContractError

_log = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9      # relative to the heatmap's total mass


@dataclass(frozen=True, slots=True)
class MaskRect:
    top: int
    left: int
    side: int

    def check(self, height: int, width: int) -> "MaskRect":
        if self.side < 1 or not (0 <= self.top <= height - self.side and 0 <= self.left <= width - self.side):
            raise ContractError(f"{self} does not fit a {height}×{width} frame")
        return self

    def to_list(self) -> list[int]:
        return [self.top, self.left, self.side]


@dataclass(eq=False)
class VisualPatch:
    values: torch.Tensor          # C×l×l, or N×C×l×l when one patch per frame

    @property
    def side(self) -> int:
        return self.values.shape[-1]

    @property
    def per_frame(self) -> bool:
        return self.values.ndim == 4


@dataclass(eq=False)
class NegativeVisualBank:
    tensors: torch.Tensor         # K×C×H×W

    @property
    def K(self) -> int:
        return self.tensors.shape[0]


# ── mask location ─────────────────────────────────────────────────────────
def window_sums(heatmap: np.ndarray, side: int) -> np.ndarray:
    """All side×side window sums via a zero-padded 2-D prefix sum."""
    h, w = heatmap.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = heatmap.astype(np.float64).cumsum(0).cumsum(1)
    return (integral[side:, side:] - integral[:-side, side:]
            - integral[side:, :-side] + integral[:-side, :-side])


def locate_mask(first_frame: torch.Tensor, saliency_provider: Callable[[torch.Tensor], torch.Tensor],
                side: int) -> MaskRect:
    """
    Best side×side window of the first frame's saliency.  Ties go to the
    smallest top, then the smallest left.
    """
    h, w = first_frame.shape[-2:]
    if side > min(h, w) or side < 1:
        raise ContractError(f"mask side {side} does not fit a {h}×{w} frame")
    heat = saliency_provider(first_frame)
    heat = heat.detach().cpu().numpy() if isinstance(heat, torch.Tensor) else np.asarray(heat)
    sums = window_sums(heat, side)
    scale = max(float(np.abs(heat).sum()), 1.0)
    top, left = np.argwhere(sums >= sums.max() - TIE_TOLERANCE * scale)[0]
    return MaskRect(int(top), int(left), side)


def random_rect(video_id: str, frame_shape, side: int, seed: int) -> MaskRect:
    """Seeded per-video rectangle for the random-placement ablation."""
    _, h, w = frame_shape
    if side > min(h, w):
        raise ContractError(f"mask side {side} does not fit a {h}×{w} frame")
    rng = np.random.default_rng([seed, zlib.crc32(video_id.encode("utf-8"))])
    return MaskRect(int(rng.integers(0, h - side + 1)), int(rng.integers(0, w - side + 1)), side)


# ── prompt application ────────────────────────────────────────────────────
def apply_visual_prompt(frame: torch.Tensor, rect: MaskRect, patch: VisualPatch | torch.Tensor,
                        mode: str = "replace", pixel_range=(0.0, 1.0)) -> torch.Tensor:
    """
    Write ``patch`` into ``rect`` of ``frame`` (C×H×W or N×C×H×W).

    ``replace`` sets the rectangle to the patch values; ``additive`` adds the
    patch to the frame crop and clamps to ``pixel_range``.  Pixels outside the
    rectangle are returned untouched.
    """
    values = patch.values if isinstance(patch, VisualPatch) else patch
    if values.shape[-1] != rect.side or values.shape[-2] != rect.side:
        raise ContractError(f"patch side {tuple(values.shape[-2:])} != rect side {rect.side}")
    rect.check(*frame.shape[-2:])
    rows = slice(rect.top, rect.top + rect.side)
    cols = slice(rect.left, rect.left + rect.side)
    values = values.to(frame.dtype)
    out = frame.clone()
    if mode == "replace":
        out[..., rows, cols] = values.expand_as(out[..., rows, cols])
    elif mode == "additive":
        lo, hi = pixel_range
        out[..., rows, cols] = torch.clamp(frame[..., rows, cols] + values, lo, hi)
    else:
        raise ContractError(f"unknown patch mode {mode!r}")
    return out


def border_mask(height: int, width: int, pad_width: int, dtype=torch.bool) -> torch.Tensor:
    if not 0 < 2 * pad_width < min(height, width):
        raise ContractError(f"pad width {pad_width} leaves no interior in a {height}×{width} frame")
    mask = torch.ones(height, width, dtype=torch.bool)
    mask[pad_width:height - pad_width, pad_width:width - pad_width] = False
    return mask.to(dtype)


def apply_padding_prompt(frame: torch.Tensor, pad: torch.Tensor, pad_width: int,
                         mode: str = "additive", pixel_range=(0.0, 1.0)) -> torch.Tensor:
    """Frame-sized prompt acting only on a border of ``pad_width`` pixels."""
    border = border_mask(*frame.shape[-2:], pad_width)
    pad = pad.to(frame.dtype)
    inside = pad if mode == "replace" else torch.clamp(frame + pad, *pixel_range)
    return torch.where(border, inside, frame)


# ── temporal pooling ──────────────────────────────────────────────────────
def encode_video(frames: torch.Tensor, encoder: DualEncoder) -> torch.Tensor:
    """N×C×H×W prompted frames → one unit-norm video embedding."""
    if frames.ndim != 4 or frames.shape[0] < 1:
        raise ContractError(f"encode_video needs N×C×H×W with N >= 1, got {tuple(frames.shape)}")
    emb, _ = encoder.encode_frames(frames)
    return F.normalize(emb.mean(dim=0), dim=-1)


def encode_videos(frames: torch.Tensor, encoder: DualEncoder) -> torch.Tensor:
    """B×N×C×H×W → B×d, one encoder call for the whole batch."""
    b, n = frames.shape[:2]
    emb, _ = encoder.encode_frames(frames.reshape(b * n, *frames.shape[2:]))
    return F.normalize(emb.view(b, n, -1).mean(dim=1), dim=-1)


# ── negative bank ─────────────────────────────────────────────────────────
def init_negative_bank(K: int, frame_shape, pixel_range=(0.0, 1.0), seed: int = 0,
                       dtype: torch.dtype = torch.float64) -> NegativeVisualBank:
    if K < 1:
        raise ContractError(f"negative bank needs K >= 1, got {K}")
    lo, hi = pixel_range
    gen = torch.Generator().manual_seed(seed)
    tensors = lo + (hi - lo) * torch.rand(K, *frame_shape, generator=gen, dtype=dtype)
    return NegativeVisualBank(tensors.requires_grad_(True))


def encode_negative_bank(bank: NegativeVisualBank, encoder: DualEncoder) -> torch.Tensor:
    """K × d unit rows (F̄_V')."""
    emb, _ = encoder.encode_frames(bank.tensors)
    return F.normalize(emb, dim=-1)


def init_patch(channels: int, side: int, mode: str = "additive", frames: int | None = None,
               pixel_range=(0.0, 1.0), seed: int = 0, dtype: torch.dtype = torch.float64) -> VisualPatch:
    """
    Additive patches start at zero (a no-op perturbation).  Replace patches
    start at mid-range grey with a little noise.
    """
    shape = (channels, side, side) if frames is None else (frames, channels, side, side)
    if mode == "additive":
        values = torch.zeros(shape, dtype=dtype)
    else:
        lo, hi = pixel_range
        gen = torch.Generator().manual_seed(seed)
        values = (lo + hi) / 2 + 0.02 * (hi - lo) * torch.randn(shape, generator=gen, dtype=dtype)
    return VisualPatch(values.requires_grad_(True))
