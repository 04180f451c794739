"""
Threshold-free open-set metrics.

AUROC is the Mann-Whitney probability that a known video outscores an
unknown one (ties count ½).  OSCR is the area under correct-classification
rate of knowns against false-positive rate of unknowns as the knownness
threshold sweeps every distinct score, plus the ±∞ endpoints.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.metrics import roc_auc_score

from openfer.errors import MetricError


@dataclass(frozen=True, slots=True)
class ScoredSample:
    knownness: float
    true_label: int | None        # None marks an unknown-class video
    predicted_known: int

    def __post_init__(self):
        if not np.isfinite(self.knownness):
            raise MetricError(f"non-finite knownness {self.knownness}")

    @property
    def is_known(self) -> bool:
        return self.true_label is not None


@dataclass
class EvalReport:
    auroc: float
    oscr: float
    split: dict | None
    n_known: int
    n_unknown: int
    score_name: str = "max_p_h"
    threshold: float | None = None
    open_accuracy: float | None = None
    closed_accuracy: float | None = None
    masks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _scores(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise MetricError(f"{what} scores are empty")
    if not np.isfinite(arr).all():
        raise MetricError(f"{what} scores contain non-finite values")
    return arr


def auroc(known_scores, unknown_scores) -> float:
    k = _scores(known_scores, "known")
    u = _scores(unknown_scores, "unknown")
    y_true = np.concatenate([np.ones_like(k), np.zeros_like(u)])
    return float(roc_auc_score(y_true, np.concatenate([k, u])))


def oscr(samples) -> float:
    samples = list(samples)
    known = [s for s in samples if s.is_known]
    unknown = [s for s in samples if not s.is_known]
    if not known or not unknown:
        raise MetricError(f"OSCR needs both populations, got {len(known)} known / {len(unknown)} unknown")

    correct = np.sort([s.knownness for s in known if s.predicted_known == s.true_label])
    negatives = np.sort([s.knownness for s in unknown])
    thresholds = np.unique([s.knownness for s in samples])[::-1]          # descending

    # counts of scores >= θ for every distinct θ, via the sorted arrays
    cc = len(correct) - np.searchsorted(correct, thresholds, side="left")
    fp = len(negatives) - np.searchsorted(negatives, thresholds, side="left")
    ccr = np.concatenate([[0.0], cc / len(known), [len(correct) / len(known)]])
    fpr = np.concatenate([[0.0], fp / len(unknown), [1.0]])
    return float(np.sum(np.diff(fpr) * (ccr[1:] + ccr[:-1]) / 2.0))


def aggregate(reports) -> tuple[float, float]:
    reports = list(reports)
    if not reports:
        raise MetricError("cannot aggregate zero reports")
    return (float(np.mean([r.auroc for r in reports])),
            float(np.mean([r.oscr for r in reports])))
