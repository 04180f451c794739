"""
Prompt training loop.

Mini-batch SGD with momentum over prompt parameters only; the encoder stays
frozen.  Learning rate follows ``lr · decay_factor ** (epoch // decay_every)``.
Masks are located once per video per epoch from the un-prompted first frame.
A seeded 10 % slice of the known training videos is held back and used after
training to calibrate the open-set threshold, which is stored in the
checkpoint metadata.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np
import torch

from openfer.encoders import DualEncoder, build_encoder
from openfer.errors import DivergenceError, ProtocolError
from openfer.ingest import UNKNOWN, Dataset, sample_frames, stratified_holdout
from openfer.learning.checkpoint import Checkpoint, save_checkpoint
from openfer.learning.inference import ScoreBundle, calibrate_threshold, score_batch
from openfer.learning.objectives import BatchFeatures, total_loss
from openfer.prompting import PromptState, init_prompt_state
from openfer.utils.paths import config_digest, run_dir as make_run_dir, write_snapshot

_log = logging.getLogger(__name__)

LOSS_LOG = "loss_log.jsonl"


def lr_at(epoch: int, optim) -> float:
    return optim.lr * optim.decay_factor ** (epoch // optim.decay_every)


def guard_known_only(dataset: Dataset) -> None:
    """Training data must hold known classes only."""
    K = len(dataset.class_names)
    if UNKNOWN in dataset.class_names:
        raise ProtocolError("training set carries the unknown sentinel class")
    bad = [s.id for s in dataset if not 0 <= s.label < K]
    if bad:
        raise ProtocolError(f"training set contains unknown-class samples: {bad[:5]}")


def _batches(n: int, size: int, gen: torch.Generator) -> list[list[int]]:
    """Shuffled index chunks; a trailing singleton joins the previous chunk."""
    order = torch.randperm(n, generator=gen).tolist()
    chunks = [order[i:i + size] for i in range(0, n, size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        tail = chunks.pop()
        chunks[-1] += tail
    return chunks


def stack_videos(dataset: Dataset, N: int, dtype: torch.dtype) -> torch.Tensor:
    """V×N×C×H×W tensor of uniformly sampled frames."""
    return torch.stack([sample_frames(s, N) for s in dataset]).to(dtype)


def locate_masks(state: PromptState, dataset: Dataset, videos: torch.Tensor,
                 encoder: DualEncoder) -> list:
    return [state.rect_for(s.id, videos[i, 0], encoder) for i, s in enumerate(dataset)]


def score_videos(state: PromptState, videos: torch.Tensor, rects, encoder: DualEncoder,
                 eval_cfg) -> ScoreBundle:
    """No-grad scoring in ``eval.batch_size`` chunks."""
    parts = []
    with torch.no_grad():
        known = state.known_text(encoder)
        neg_visual = state.negative_visual(encoder)
        for i in range(0, videos.shape[0], eval_cfg.batch_size):
            v = state.video_embeddings(videos[i:i + eval_cfg.batch_size],
                                       rects[i:i + eval_cfg.batch_size], encoder)
            parts.append(score_batch(v, known, neg_visual, encoder.logit_scale,
                                     eval_cfg.ne_scale, eval_cfg.ne_logit_sign))
    return ScoreBundle.concat(parts)


def _check_finite(breakdown, step: int) -> None:
    for name, value in breakdown.components().items():
        if not torch.isfinite(value).all():
            raise DivergenceError(f"loss component {name} is non-finite at step {step}", name)
    if not torch.isfinite(breakdown.total).all():
        raise DivergenceError(f"total loss is non-finite at step {step}", "total")


def train(config, train_set: Dataset | None = None, *, run_dir: Path | None = None,
          split=None, encoder: DualEncoder | None = None) -> Checkpoint:
    """
    Learn prompts on ``train_set`` (known classes only, labels 0..K-1) and
    return the final checkpoint.  When ``train_set`` is None the configured
    source is split with the first custom division.
    """
    config.validate()
    if train_set is None:
        from openfer.runners.protocol import default_split

        train_set, _, split = default_split(config)
    guard_known_only(train_set)
    out = Path(run_dir) if run_dir is not None else make_run_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(config, out)

    encoder = encoder or build_encoder(config.encoder, train_set.frame_shape, out / "cache")
    encoder_digest = encoder.constants_digest()
    seed = config.run.seed
    torch.manual_seed(seed)

    fit_idx, calib_idx = stratified_holdout(train_set.labels, config.data.holdout_fraction, seed)
    fit, calib = train_set.subset(fit_idx), train_set.subset(calib_idx)
    if len(fit) < 2:
        raise ProtocolError(f"need at least 2 training videos after the holdout, got {len(fit)}")

    N = config.data.frames_per_video
    videos = stack_videos(fit, N, encoder.dtype)
    labels = torch.tensor(fit.labels, dtype=torch.long)
    state = init_prompt_state(train_set.class_names, encoder, config.prompt, frames_per_video=N,
                              learn_logit_scale=config.loss.learn_logit_scale, seed=seed)

    optim = config.optim
    optimizer = torch.optim.SGD(state.parameters(), lr=optim.lr, momentum=optim.momentum)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda e: optim.decay_factor ** (e // optim.decay_every))

    meta = {
        "config_digest": config_digest(config),
        "class_names": list(train_set.class_names),
        "split": split.to_dict() if split is not None else None,
        "frames_per_video": N,
        "seed": seed,
        "encoder_digest": encoder_digest,
    }
    history: list[dict] = []
    step = 0
    log_path = out / LOSS_LOG
    with log_path.open("w", encoding="utf-8") as log_fh:
        for epoch in range(optim.epochs):
            rects = locate_masks(state, fit, videos, encoder)
            gen = torch.Generator().manual_seed(seed * 100_003 + epoch)
            epoch_totals = []
            for idx in _batches(len(fit), optim.batch_size, gen):
                v = state.video_embeddings(videos[idx], [rects[i] for i in idx], encoder)
                feats = BatchFeatures(v, labels[idx], state.known_text(encoder),
                                      state.negative_text(encoder), state.negative_visual(encoder))
                bundle = score_batch(v, feats.known_text, feats.neg_visual, encoder.logit_scale,
                                     config.eval.ne_scale, config.eval.ne_logit_sign)
                breakdown = total_loss(bundle, feats, feats.labels, config.loss,
                                       state.alignment_scale(encoder))
                _check_finite(breakdown, step)

                optimizer.zero_grad()
                breakdown.total.backward()
                optimizer.step()

                record = {"step": step, "epoch": epoch, "lr": optimizer.param_groups[0]["lr"],
                          **breakdown.as_floats()}
                log_fh.write(json.dumps(record) + "\n")
                history.append(record)
                epoch_totals.append(record["total"])
                step += 1
            scheduler.step()
            _log.info("epoch %d/%d  lr=%.2e  loss=%.4f", epoch + 1, optim.epochs,
                      lr_at(epoch, optim), float(np.mean(epoch_totals)))

            if (epoch + 1) % config.run.save_every == 0 and epoch + 1 < optim.epochs:
                save_checkpoint(out / "checkpoints" / f"epoch_{epoch + 1:04d}", state,
                                {**meta, "epoch": epoch + 1}, optimizer)

    if encoder.constants_digest() != encoder_digest:
        raise DivergenceError("encoder constants changed during prompt training", "encoder")

    meta["threshold"] = calibrate(state, calib if len(calib) else fit, encoder, config)
    meta["epoch"] = optim.epochs
    ckpt = save_checkpoint(out / "checkpoints" / "final", state, meta, optimizer)
    ckpt.history = history
    print(f"✓ trained {optim.epochs} epoch(s) → {ckpt.directory}")
    return ckpt


def calibrate(state: PromptState, known: Dataset, encoder: DualEncoder, config) -> float:
    """Threshold at ``eval.target_tpr`` on held-back known videos."""
    if len(known) == 0:
        raise ProtocolError("no known videos to calibrate the threshold on")
    videos = stack_videos(known, config.data.frames_per_video, encoder.dtype)
    rects = locate_masks(state, known, videos, encoder)
    bundle = score_videos(state, videos, rects, encoder, config.eval)
    threshold = calibrate_threshold(bundle.knownness.numpy(), config.eval.target_tpr)
    _log.info("calibrated threshold %.6f on %d known videos", threshold, len(known))
    if not math.isfinite(threshold):
        raise DivergenceError("calibrated threshold is non-finite", "threshold")
    return threshold
