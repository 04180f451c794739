"""
Directional finite-difference checks.

For a scalar function f of tensors θ and a random unit direction u, the
analytic derivative ⟨∇f(θ), u⟩ is compared against the central difference
(f(θ + h·u) − f(θ − h·u)) / 2h.  Everything runs in float64.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import torch
import torch.nn.functional as F

from openfer.encoders import MockDualEncoder
from openfer.learning.inference import score_batch
from openfer.learning.objectives import (
    BatchFeatures, cross_entropy, negative_alignment, supervised_contrastive, total_loss,
)
from openfer.prompting import init_prompt_state

_log = logging.getLogger(__name__)

STEP = 1e-3
ABS_FLOOR = 1e-8


@dataclass
class GradcheckResult:
    name: str
    errors: list[float] = field(default_factory=list)
    tolerance: float = 1e-3

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), ABS_FLOOR)


def directional_errors(fn: Callable[[], torch.Tensor], params: Sequence[torch.Tensor],
                       directions: int = 20, step: float = STEP, seed: int = 0) -> list[float]:
    """Relative errors between analytic and central-difference directional derivatives."""
    grads = torch.autograd.grad(fn(), params, allow_unused=True)
    grads = [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
    gen = torch.Generator().manual_seed(seed)
    errors = []
    for _ in range(directions):
        u = [torch.randn(p.shape, generator=gen, dtype=p.dtype) for p in params]
        norm = torch.sqrt(sum((x * x).sum() for x in u))
        u = [x / norm for x in u]
        analytic = float(sum((g * x).sum() for g, x in zip(grads, u)))
        with torch.no_grad():
            for p, x in zip(params, u):
                p.add_(step * x)
            f_plus = float(fn())
            for p, x in zip(params, u):
                p.sub_(2 * step * x)
            f_minus = float(fn())
            for p, x in zip(params, u):
                p.add_(step * x)
        errors.append(relative_error(analytic, (f_plus - f_minus) / (2 * step)))
    return errors


# ── suites ────────────────────────────────────────────────────────────────
def check_cross_entropy(B: int = 8, K: int = 5, directions: int = 20, seed: int = 0) -> GradcheckResult:
    gen = torch.Generator().manual_seed(seed)
    logits = torch.randn(B, K, generator=gen, dtype=torch.float64).requires_grad_(True)
    y = torch.randint(0, K, (B,), generator=gen)
    errs = directional_errors(lambda: cross_entropy(torch.softmax(logits, 1), y), [logits],
                              directions, seed=seed)
    return GradcheckResult("cross_entropy", errs, 1e-4)


def check_supervised_contrastive(B: int = 8, d: int = 32, K: int = 5, tau: float = 0.07,
                                 directions: int = 20, seed: int = 0) -> GradcheckResult:
    gen = torch.Generator().manual_seed(seed)
    raw = torch.randn(B, d, generator=gen, dtype=torch.float64).requires_grad_(True)
    y = torch.arange(B) % K
    errs = directional_errors(lambda: supervised_contrastive(F.normalize(raw, dim=1), y, tau),
                              [raw], directions, step=1e-4, seed=seed)
    return GradcheckResult("supervised_contrastive", errs, 1e-4)


def check_negative_alignment(K: int = 5, d: int = 32, scale: float = 10.0,
                             directions: int = 20, seed: int = 0) -> GradcheckResult:
    gen = torch.Generator().manual_seed(seed)
    nv = torch.randn(K, d, generator=gen, dtype=torch.float64).requires_grad_(True)
    nt = torch.randn(K, d, generator=gen, dtype=torch.float64).requires_grad_(True)
    errs = directional_errors(
        lambda: negative_alignment(F.normalize(nv, dim=1), F.normalize(nt, dim=1), scale),
        [nv, nt], directions, step=1e-4, seed=seed)
    return GradcheckResult("negative_alignment", errs, 1e-4)


def check_total_loss(config, B: int = 8, K: int = 5, directions: int = 20,
                     seed: int = 0) -> GradcheckResult:
    """
    Full objective against every prompt parameter at once, on the float64
    mock encoder.  Frames stay inside (0.1, 0.9) and the patch starts small
    and random so no pixel sits on the clamp boundary.
    """
    enc = config.encoder
    side = config.data.synthetic.frame_shape
    encoder = MockDualEncoder(enc.embed_dim, enc.token_dim, tuple(side), enc.pool,
                              enc.logit_scale, enc.position_encoding, enc.seed, torch.float64)
    N = 2
    names = tuple(f"class {k}" for k in range(K))
    state = init_prompt_state(names, encoder, config.prompt, frames_per_video=N,
                              learn_logit_scale=config.loss.learn_logit_scale, seed=seed)
    gen = torch.Generator().manual_seed(seed)
    if state.patch is not None:
        with torch.no_grad():
            state.patch.values.add_(0.02 * torch.randn(state.patch.values.shape, generator=gen,
                                                       dtype=torch.float64))
    videos = 0.1 + 0.8 * torch.rand(B, N, *encoder.frame_shape, generator=gen, dtype=torch.float64)
    y = torch.arange(B) % K
    rects = [state.rect_for(f"probe_{i}", videos[i, 0], encoder) for i in range(B)]

    def objective():
        v = state.video_embeddings(videos, rects, encoder)
        feats = BatchFeatures(v, y, state.known_text(encoder), state.negative_text(encoder),
                              state.negative_visual(encoder))
        bundle = score_batch(v, feats.known_text, feats.neg_visual, encoder.logit_scale,
                             config.eval.ne_scale, config.eval.ne_logit_sign)
        return total_loss(bundle, feats, y, config.loss, state.alignment_scale(encoder)).total

    errs = directional_errors(objective, state.parameters(), directions, seed=seed)
    return GradcheckResult("total_loss", errs, 1e-3)


def run_gradcheck(config, directions: int = 20, seed: int = 0) -> list[GradcheckResult]:
    results = [
        check_cross_entropy(directions=directions, seed=seed),
        check_supervised_contrastive(directions=directions, seed=seed),
        check_negative_alignment(directions=directions, seed=seed),
        check_total_loss(config, directions=directions, seed=seed),
    ]
    for r in results:
        _log.info("gradcheck %-24s max rel err %.2e (tol %.0e) %s", r.name, r.max_error,
                  r.tolerance, "ok" if r.passed else "FAILED")
    return results
