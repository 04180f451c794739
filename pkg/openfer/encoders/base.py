"""
Dual-encoder contract.

Encoders are frozen: every tensor they own is a buffer, never a parameter,
so gradients flow *through* them to prompt parameters and never into
encoder weights.
"""
from __future__ import annotations

import abc
import hashlib

import torch
import torch.nn.functional as F
from torch import nn

from openfer.errors import ContractError


class DualEncoder(nn.Module, abc.ABC):
    embed_dim: int
    token_dim: int
    frame_shape: tuple[int, int, int]
    logit_scale: float
    pixel_range: tuple[float, float] = (0.0, 1.0)
    dtype: torch.dtype = torch.float32

    # ── text branch ──────────────────────────────────────────────────────
    @abc.abstractmethod
    def _text(self, tokens: torch.Tensor) -> torch.Tensor:
        """L × token_dim → embed_dim."""

    @abc.abstractmethod
    def tokenize(self, text: str) -> torch.Tensor:
        """Fixed (non-learnable) token embeddings, L × token_dim."""

    def encode_text(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.ndim != 2 or tokens.shape[0] == 0:
            raise ContractError(f"encode_text needs a non-empty L×{self.token_dim} sequence, "
                                f"got shape {tuple(tokens.shape)}")
        if tokens.shape[1] != self.token_dim:
            raise ContractError(f"token width {tokens.shape[1]} != token_dim {self.token_dim}")
        return self._text(tokens)

    # ── visual branch ────────────────────────────────────────────────────
    @abc.abstractmethod
    def _frames(self, frames: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """N×C×H×W → (N × embed_dim, N × C' × h' × w')."""

    @abc.abstractmethod
    def cam_weights(self) -> torch.Tensor:
        """Class-agnostic CAM channel weights, length C'."""

    def encode_frames(self, frames: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if frames.ndim != 4 or tuple(frames.shape[1:]) != tuple(self.frame_shape):
            raise ContractError(
                f"frames must be N×{'×'.join(map(str, self.frame_shape))}, got {tuple(frames.shape)}")
        return self._frames(frames.to(self.dtype))

    def encode_frame(self, frame: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if tuple(frame.shape) != tuple(self.frame_shape):
            raise ContractError(f"frame shape {tuple(frame.shape)} != {tuple(self.frame_shape)}")
        emb, fmap = self.encode_frames(frame.unsqueeze(0))
        return emb[0], fmap[0]

    @torch.no_grad()
    def saliency(self, frame: torch.Tensor) -> torch.Tensor:
        """
        CAM heatmap (H × W, values >= 0): channel-weighted sum of the spatial
        feature map, bilinearly upsampled to the frame and min-shifted.
        """
        _, fmap = self.encode_frame(frame)
        w = self.cam_weights().to(fmap.dtype)
        if w.sum() < 0:            # orient so that stronger activation scores higher
            w = -w
        cam = torch.einsum("c,chw->hw", w, fmap)
        h, wd = self.frame_shape[1:]
        cam = F.interpolate(cam[None, None], size=(h, wd), mode="bilinear", align_corners=False)[0, 0]
        return cam - cam.min()

    def constants_digest(self) -> str:
        h = hashlib.sha256()
        for name, buf in sorted(self.state_dict().items()):
            h.update(name.encode())
            h.update(buf.detach().cpu().contiguous().numpy().tobytes())
        return h.hexdigest()
