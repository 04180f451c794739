"""
Open-set multi-task objective.

    L = L_KN + L_NE + L_H
    L_KN = CE(P_KN, y) + SupCon(F_V')
    L_NE = CE(P_NE, y) + CLIP(F̄_V', F̄_T')
    L_H  = CE(P_H, y)

Each reported component already carries its configured weight, so
``total`` is the plain sum of the fields.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import torch
import torch.nn.functional as F

from openfer.errors import ContractError

PROB_FLOOR = 1e-12


@dataclass(eq=False)
class BatchFeatures:
    video_embeddings: torch.Tensor   # B×d
    labels: torch.Tensor             # B
    known_text: torch.Tensor         # K×d
    neg_text: torch.Tensor           # K×d
    neg_visual: torch.Tensor         # K×d


@dataclass(eq=False)
class LossBreakdown:
    l_kn_ce: torch.Tensor
    l_kn_cl: torch.Tensor
    l_ne_ce: torch.Tensor
    l_ne_clip: torch.Tensor
    l_h: torch.Tensor
    l_ne_cl: torch.Tensor
    total: torch.Tensor

    def components(self) -> dict[str, torch.Tensor]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "total"}

    def as_floats(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name).detach()) for f in fields(self)}


def cross_entropy(P: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean of ``-log P[i, y_i]`` with a 1e-12 floor."""
    y = torch.as_tensor(y, dtype=torch.long)
    if y.ndim != 1 or y.shape[0] != P.shape[0]:
        raise ContractError(f"{tuple(y.shape)} labels for {P.shape[0]} probability rows")
    if y.numel() and (int(y.min()) < 0 or int(y.max()) >= P.shape[1]):
        raise ContractError(f"label outside 0..{P.shape[1] - 1}: {y.tolist()}")
    picked = P.gather(1, y.view(-1, 1)).squeeze(1)
    return -torch.log(picked.clamp_min(PROB_FLOOR)).mean()


def supervised_contrastive(z: torch.Tensor, y: torch.Tensor, temperature: float = 0.07) -> torch.Tensor:
    """
    Supervised contrastive loss over unit rows ``z``.  Anchors without a
    positive are skipped; 0 when no anchor has one.
    """
    B = z.shape[0]
    if B < 2:
        raise ContractError(f"supervised contrastive loss needs B >= 2, got {B}")
    if temperature <= 0:
        raise ContractError(f"temperature must be > 0, got {temperature}")
    y = torch.as_tensor(y).view(-1)
    self_mask = torch.eye(B, dtype=torch.bool, device=z.device)
    sim = (z @ z.T / temperature).masked_fill(self_mask, float("-inf"))
    log_prob = sim - torch.logsumexp(sim, dim=1, keepdim=True)
    positives = (y.view(-1, 1) == y.view(1, -1)) & ~self_mask
    n_pos = positives.sum(1)
    has_pos = n_pos > 0
    if not bool(has_pos.any()):
        return z.sum() * 0.0
    pos_log = torch.where(positives, log_prob, torch.zeros_like(log_prob)).sum(1)
    per_anchor = -pos_log[has_pos] / n_pos[has_pos]
    return per_anchor.mean()


def negative_alignment(neg_visual: torch.Tensor, neg_text: torch.Tensor, scale) -> torch.Tensor:
    """Symmetric CLIP loss over the K×K negative visual/text similarity matrix."""
    if neg_visual.shape != neg_text.shape:
        raise ContractError(f"shape mismatch {tuple(neg_visual.shape)} vs {tuple(neg_text.shape)}")
    K = neg_visual.shape[0]
    if K < 2:
        raise ContractError("negative alignment needs K >= 2")
    logits = scale * (neg_visual @ neg_text.T)
    target = torch.arange(K, device=logits.device)
    return 0.5 * (F.cross_entropy(logits, target) + F.cross_entropy(logits.T, target))


def total_loss(bundle, features: BatchFeatures, y, loss_cfg, alignment_scale) -> LossBreakdown:
    """
    ``bundle`` carries P_KN, P_NE and P_H for the batch; ``loss_cfg`` is the
    ``loss`` config section (weights, supcon_tau, ne_supcon).
    """
    w = loss_cfg.weights
    y = torch.as_tensor(y, dtype=torch.long)
    z = features.video_embeddings
    zero = z.sum() * 0.0

    l_kn_ce = w["kn_ce"] * cross_entropy(bundle.p_kn, y)
    l_kn_cl = (w["kn_cl"] * supervised_contrastive(z, y, loss_cfg.supcon_tau)
               if w["kn_cl"] else zero)
    l_ne_ce = w["ne_ce"] * cross_entropy(bundle.p_ne, y)
    l_ne_clip = (w["ne_clip"] * negative_alignment(features.neg_visual, features.neg_text, alignment_scale)
                 if w["ne_clip"] else zero)
    l_h = w["h"] * cross_entropy(bundle.p_h, y)

    l_ne_cl = zero
    if loss_cfg.ne_supcon:
        # negatives get labels K..2K-1, so they only ever act as negatives
        K = features.neg_visual.shape[0]
        stacked = torch.cat([z, features.neg_visual.to(z.dtype)])
        labels = torch.cat([y, K + torch.arange(K)])
        l_ne_cl = supervised_contrastive(stacked, labels, loss_cfg.supcon_tau)

    total = l_kn_ce + l_kn_cl + l_ne_ce + l_ne_clip + l_h + l_ne_cl
    return LossBreakdown(l_kn_ce, l_kn_cl, l_ne_ce, l_ne_clip, l_h, l_ne_cl, total)
