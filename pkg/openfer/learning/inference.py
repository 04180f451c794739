"""
Open-set scoring.

    P_KN = softmax(scale · cos(F_V', F_T'))
    P_NE = softmax(sign · ne_scale · ‖F_V' − F̄_V'‖)
    P_H  = (P_KN + P_NE) / 2,      knownness = max_k P_H

A video farther from the negative representation of class k is more likely
to be class k.  Knownness below the calibrated threshold means "unknown".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from openfer.errors import CalibrationError, ContractError


@dataclass(eq=False)
class ScoreBundle:
    p_kn: torch.Tensor
    p_ne: torch.Tensor
    p_h: torch.Tensor
    knownness: torch.Tensor

    def __len__(self) -> int:
        return self.p_h.shape[0]

    @property
    def K(self) -> int:
        return self.p_h.shape[1]

    def detach(self) -> "ScoreBundle":
        return ScoreBundle(self.p_kn.detach(), self.p_ne.detach(), self.p_h.detach(),
                           self.knownness.detach())

    @classmethod
    def concat(cls, bundles) -> "ScoreBundle":
        bundles = list(bundles)
        return cls(*(torch.cat([getattr(b, n) for b in bundles])
                     for n in ("p_kn", "p_ne", "p_h", "knownness")))


@dataclass(frozen=True, slots=True)
class OpenSetDecision:
    predicted: int
    score: float
    threshold: float


def _check_width(a: torch.Tensor, b: torch.Tensor, what: str):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ContractError(f"{what}: embedding widths differ, {tuple(a.shape)} vs {tuple(b.shape)}")


def prediction_known(video_emb: torch.Tensor, text_emb: torch.Tensor, scale) -> torch.Tensor:
    _check_width(video_emb, text_emb, "prediction_known")
    return torch.softmax(scale * (video_emb @ text_emb.T), dim=1)


def euclidean(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Pairwise distances, differentiable at coincident points."""
    diff = a.unsqueeze(1) - b.unsqueeze(0)
    return torch.sqrt((diff * diff).sum(-1).clamp_min(1e-24))


def prediction_negative(video_emb: torch.Tensor, neg_visual: torch.Tensor, scale_d: float = 10.0,
                        sign: int = 1) -> torch.Tensor:
    _check_width(video_emb, neg_visual, "prediction_negative")
    if scale_d <= 0:
        raise ContractError(f"distance scale must be > 0, got {scale_d}")
    return torch.softmax(sign * scale_d * euclidean(video_emb, neg_visual.to(video_emb.dtype)), dim=1)


def fuse(p_kn: torch.Tensor, p_ne: torch.Tensor) -> torch.Tensor:
    if p_kn.shape != p_ne.shape:
        raise ContractError(f"cannot fuse {tuple(p_kn.shape)} with {tuple(p_ne.shape)}")
    return (p_kn + p_ne) / 2


def score_batch(video_emb, known_text, neg_visual, logit_scale, ne_scale: float = 10.0,
                ne_sign: int = 1) -> ScoreBundle:
    p_kn = prediction_known(video_emb, known_text, logit_scale)
    p_ne = prediction_negative(video_emb, neg_visual, ne_scale, ne_sign)
    p_h = fuse(p_kn, p_ne)
    return ScoreBundle(p_kn, p_ne, p_h, p_h.max(dim=1).values)


def calibrate_threshold(known_scores, target_tpr: float = 0.95) -> float:
    """(1 − target_tpr) quantile of known validation knownness, linear interpolation."""
    scores = np.asarray(known_scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise CalibrationError("cannot calibrate a threshold on zero known scores")
    if not 0 < target_tpr < 1:
        raise CalibrationError(f"target_tpr must be in (0,1), got {target_tpr}")
    if not np.isfinite(scores).all():
        raise CalibrationError("non-finite knownness in calibration scores")
    return float(np.quantile(scores, 1.0 - target_tpr, method="linear"))


def classify_open(bundle: ScoreBundle, threshold: float) -> list[OpenSetDecision]:
    """Unknown sentinel K when knownness < threshold, else argmax P_H (first on ties)."""
    p_h = bundle.p_h.detach().cpu().numpy()
    scores = bundle.knownness.detach().cpu().numpy()
    K = p_h.shape[1]
    out = []
    for row, s in zip(p_h, scores):
        pred = K if s < threshold else int(np.argmax(row))
        out.append(OpenSetDecision(pred, float(s), float(threshold)))
    return out
