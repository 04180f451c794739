"""
Everything the optimiser touches, in one place: textual contexts, the
visual patch (or padding frame), the negative visual bank and the optional
learnable negative contexts / alignment temperature.  The encoder itself is
never part of this state.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import torch

from openfer.encoders.base import DualEncoder
from openfer.errors import ContractError

from .text import (
    TextContext, encode_known_prompts, encode_learnable_negative_prompts,
    encode_negative_prompts, init_context,
)
from .visual import (
    MaskRect, NegativeVisualBank, VisualPatch, apply_padding_prompt, apply_visual_prompt,
    encode_negative_bank, encode_videos, init_negative_bank, init_patch, locate_mask,
    random_rect,
)

_log = logging.getLogger(__name__)


@dataclass(eq=False)
class PromptState:
    class_names: tuple[str, ...]
    context: TextContext
    bank: NegativeVisualBank
    settings: object                         # utils.paths.PromptSection
    patch: VisualPatch | None = None
    neg_context: TextContext | None = None
    log_scale: torch.Tensor | None = None
    seed: int = 0

    @property
    def K(self) -> int:
        return len(self.class_names)

    # ── parameter export ──────────────────────────────────────────────────
    def named_tensors(self) -> dict[str, torch.Tensor]:
        out = {"context": self.context.vectors, "bank": self.bank.tensors}
        if self.patch is not None:
            out["patch"] = self.patch.values
        if self.neg_context is not None:
            out["neg_context"] = self.neg_context.vectors
        if self.log_scale is not None:
            out["log_logit_scale"] = self.log_scale
        return out

    def parameters(self) -> list[torch.Tensor]:
        return list(self.named_tensors().values())

    @torch.no_grad()
    def load_tensors(self, tensors: dict[str, torch.Tensor]) -> "PromptState":
        own = self.named_tensors()
        if set(own) != set(tensors):
            raise ContractError(f"prompt tensors {sorted(tensors)} do not match state {sorted(own)}")
        for name, dst in own.items():
            src = torch.as_tensor(tensors[name])
            if tuple(src.shape) != tuple(dst.shape):
                raise ContractError(f"{name}: shape {tuple(src.shape)} != {tuple(dst.shape)}")
            dst.copy_(src.to(dst.dtype))
        return self

    # ── text side ─────────────────────────────────────────────────────────
    def known_text(self, encoder: DualEncoder) -> torch.Tensor:
        return encode_known_prompts(self.context, self.class_names, encoder)

    def negative_text(self, encoder: DualEncoder) -> torch.Tensor:
        if self.neg_context is not None:
            return encode_learnable_negative_prompts(self.neg_context, self.class_names, encoder)
        return encode_negative_prompts(self.class_names, encoder)

    def alignment_scale(self, encoder: DualEncoder):
        return self.log_scale.exp() if self.log_scale is not None else encoder.logit_scale

    # ── visual side ───────────────────────────────────────────────────────
    def negative_visual(self, encoder: DualEncoder) -> torch.Tensor:
        return encode_negative_bank(self.bank, encoder)

    def rect_for(self, video_id: str, first_frame: torch.Tensor, encoder: DualEncoder) -> MaskRect | None:
        """Rectangle for one video, from its un-prompted first frame."""
        s = self.settings
        if self.patch is None or s.visual_prompt_style == "padding":
            return None
        if s.visual_prompt_style == "random_patch":
            return random_rect(video_id, encoder.frame_shape, s.patch_size, self.seed)
        return locate_mask(first_frame, encoder.saliency, s.patch_size)

    def prompt(self, frames: torch.Tensor, rect: MaskRect | None, encoder: DualEncoder) -> torch.Tensor:
        """N×C×H×W → prompted frames (unchanged when visual prompting is off)."""
        frames = frames.to(encoder.dtype)
        if self.patch is None:
            return frames
        s = self.settings
        if self.patch.per_frame and self.patch.values.shape[0] != frames.shape[0]:
            raise ContractError(
                f"{self.patch.values.shape[0]} per-frame patches for {frames.shape[0]} frames")
        if s.visual_prompt_style == "padding":
            return apply_padding_prompt(frames, self.patch.values, s.pad_width,
                                        s.patch_mode, encoder.pixel_range)
        if rect is None:
            raise ContractError("masked visual prompting needs a rectangle")
        return apply_visual_prompt(frames, rect, self.patch, s.patch_mode, encoder.pixel_range)

    def video_embeddings(self, frames: torch.Tensor, rects, encoder: DualEncoder) -> torch.Tensor:
        """B×N×C×H×W plus B rectangles → B×d unit rows (F_V')."""
        prompted = torch.stack([self.prompt(f, r, encoder) for f, r in zip(frames, rects)])
        return encode_videos(prompted, encoder)


def init_prompt_state(class_names, encoder: DualEncoder, prompt, *, frames_per_video: int,
                      learn_logit_scale: bool = False, seed: int = 0) -> PromptState:
    """Fresh prompt parameters for ``class_names`` under ``prompt`` settings."""
    class_names = tuple(class_names)
    K, dtype = len(class_names), encoder.dtype
    c, h, w = encoder.frame_shape
    context = init_context(K, prompt.context_length, encoder.token_dim, seed,
                           prompt.ctx_init_std, dtype)
    bank = init_negative_bank(K, encoder.frame_shape, encoder.pixel_range, seed + 1, dtype)

    patch = None
    if prompt.modules == "tp+vp":
        frames = frames_per_video if prompt.patch_per_frame else None
        if prompt.visual_prompt_style == "padding":
            shape = (c, h, w) if frames is None else (frames, c, h, w)
            patch = VisualPatch(torch.zeros(shape, dtype=dtype).requires_grad_(True))
        else:
            if prompt.patch_size > min(h, w):
                raise ContractError(f"patch size {prompt.patch_size} exceeds frame side {min(h, w)}")
            patch = init_patch(c, prompt.patch_size, prompt.patch_mode, frames,
                               encoder.pixel_range, seed + 2, dtype)

    neg_context = None
    if prompt.negative_text == "learnable":
        neg_context = init_context(K, prompt.context_length, encoder.token_dim, seed + 3,
                                   prompt.ctx_init_std, dtype)
    log_scale = None
    if learn_logit_scale:
        log_scale = torch.tensor(math.log(encoder.logit_scale), dtype=dtype, requires_grad=True)

    _log.debug("prompt state: K=%d M=%d modules=%s style=%s", K, prompt.context_length,
               prompt.modules, prompt.visual_prompt_style)
    return PromptState(class_names, context, bank, prompt, patch, neg_context, log_scale, seed)
