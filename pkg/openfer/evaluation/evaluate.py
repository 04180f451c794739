"""
Evaluate a trained checkpoint on an open-set test set.

Writes two JSON files into the output directory:

    scores.json   one row per test video: id, true label (K = unknown),
                  K fused probabilities, knownness
    report.json   the `EvalReport`
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable

import numpy as np

from openfer.encoders import build_encoder
from openfer.errors import CalibrationError, CompatibilityError
from openfer.ingest import UNKNOWN, Dataset
from openfer.learning.checkpoint import Checkpoint, restore_state
from openfer.learning.inference import ScoreBundle, classify_open
from openfer.learning.trainer import locate_masks, score_videos, stack_videos
from openfer.utils.paths import run_dir as make_run_dir

from .metrics import EvalReport, ScoredSample, auroc, oscr

_log = logging.getLogger(__name__)

SCORES_FILE = "scores.json"
REPORT_FILE = "report.json"

Scorer = Callable[[Dataset], ScoreBundle]


def known_names(test: Dataset) -> list[str]:
    names = list(test.class_names)
    return names[:-1] if names and names[-1] == UNKNOWN else names


def checkpoint_scorer(config, checkpoint: Checkpoint, encoder=None, masks: dict | None = None) -> Scorer:
    """Scorer that rebuilds the prompts from ``checkpoint`` and records mask rectangles."""
    def score(test: Dataset) -> ScoreBundle:
        enc = encoder or build_encoder(config.encoder, test.frame_shape)
        state = restore_state(checkpoint, enc, config.prompt,
                              learn_logit_scale=config.loss.learn_logit_scale)
        videos = stack_videos(test, config.data.frames_per_video, enc.dtype)
        rects = locate_masks(state, test, videos, enc)
        if masks is not None:
            masks.update({s.id: r.to_list() for s, r in zip(test, rects) if r is not None})
        return score_videos(state, videos, rects, enc, config.eval)
    return score


def evaluate_run(config, checkpoint: Checkpoint, test: Dataset, *, scorer: Scorer | None = None,
                 out_dir: Path | None = None, encoder=None) -> EvalReport:
    names = known_names(test)
    if names != checkpoint.class_names:
        raise CompatibilityError(
            f"checkpoint classes {checkpoint.class_names} != test known classes {names}")
    threshold = checkpoint.meta.get("threshold")
    if threshold is None:
        raise CalibrationError("checkpoint carries no calibrated threshold")
    K = len(names)

    masks: dict[str, list[int]] = {}
    scorer = scorer or checkpoint_scorer(config, checkpoint, encoder, masks)
    bundle = scorer(test).detach()
    if len(bundle) != len(test) or bundle.K != K:
        raise CompatibilityError(f"scorer returned {tuple(bundle.p_h.shape)} for {len(test)} videos, K={K}")

    p_h = bundle.p_h.cpu().numpy()
    knownness = bundle.knownness.cpu().numpy()
    labels = np.asarray(test.labels)
    argmax = p_h.argmax(axis=1)
    samples = [ScoredSample(float(s), None if y == K else int(y), int(a))
               for s, y, a in zip(knownness, labels, argmax)]

    decisions = classify_open(bundle, threshold)
    is_known = labels < K
    report = EvalReport(
        auroc=auroc(knownness[is_known], knownness[~is_known]),
        oscr=oscr(samples),
        split=test.meta.get("split") or checkpoint.meta.get("split"),
        n_known=int(is_known.sum()),
        n_unknown=int((~is_known).sum()),
        threshold=float(threshold),
        open_accuracy=float(np.mean([d.predicted == y for d, y in zip(decisions, labels)])),
        closed_accuracy=float(np.mean(argmax[is_known] == labels[is_known])),
        masks=masks,
    )

    out = Path(out_dir) if out_dir is not None else make_run_dir(config, "eval")
    out.mkdir(parents=True, exist_ok=True)
    rows = [{"id": s.id, "label": int(y), "p_h": [float(p) for p in row], "knownness": float(k)}
            for s, y, row, k in zip(test, labels, p_h, knownness)]
    scores = {"score_name": report.score_name, "class_names": names + [UNKNOWN],
              "threshold": report.threshold, "rows": rows}
    (out / SCORES_FILE).write_text(json.dumps(scores), encoding="utf-8")
    (out / REPORT_FILE).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    _log.info("AUROC %.4f  OSCR %.4f  (%d known / %d unknown)", report.auroc, report.oscr,
              report.n_known, report.n_unknown)
    print(f"✓ scores → {out / SCORES_FILE}")
    return report


def load_scores(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / SCORES_FILE
    return json.loads(path.read_text(encoding="utf-8"))
