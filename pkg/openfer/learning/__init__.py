"""
Objective, scoring, gradient checks, checkpoints and the training loop.
"""
from .checkpoint import Checkpoint, load_checkpoint, restore_state, save_checkpoint
from .gradcheck import GradcheckResult, directional_errors, run_gradcheck
from .inference import (
    OpenSetDecision, ScoreBundle, calibrate_threshold, classify_open, fuse, prediction_known,
    prediction_negative, score_batch,
)
from .objectives import (
    BatchFeatures, LossBreakdown, cross_entropy, negative_alignment, supervised_contrastive,
    total_loss,
)
from .trainer import guard_known_only, lr_at, train

__all__ = [
    "Checkpoint", "load_checkpoint", "restore_state", "save_checkpoint",
    "GradcheckResult", "directional_errors", "run_gradcheck",
    "OpenSetDecision", "ScoreBundle", "calibrate_threshold", "classify_open", "fuse",
    "prediction_known", "prediction_negative", "score_batch",
    "BatchFeatures", "LossBreakdown", "cross_entropy", "negative_alignment",
    "supervised_contrastive", "total_loss",
    "guard_known_only", "lr_at", "train",
]
