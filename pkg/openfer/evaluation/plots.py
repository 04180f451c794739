"""Known vs unknown knownness histograms from a scores file."""
from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from openfer.errors import PlotError  # noqa: E402

from .evaluate import SCORES_FILE, load_scores  # noqa: E402

_log = logging.getLogger(__name__)

PLOT_FILE = "score_distribution.png"
BINS = 20
KNOWN_COLOUR = "#0072B2"
UNKNOWN_COLOUR = "#D55E00"


def normalise(values: np.ndarray) -> np.ndarray:
    """Min-max to [0, 1]; a constant input maps to all zeros."""
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def plot_score_distributions(scores_path: str | Path, out_path: str | Path | None = None) -> Path:
    scores_path = Path(scores_path)
    try:
        scores = load_scores(scores_path)
    except (OSError, ValueError) as exc:
        raise PlotError(f"cannot read scores file {scores_path}") from exc
    K = len(scores["class_names"]) - 1
    labels = np.asarray([r["label"] for r in scores["rows"]])
    knownness = np.asarray([r["knownness"] for r in scores["rows"]], dtype=np.float64)
    if not (labels < K).any() or not (labels == K).any():
        raise PlotError(f"{scores_path}: need both known and unknown videos to plot")

    norm = normalise(knownness)
    bins = np.linspace(0.0, 1.0, BINS + 1)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(norm[labels < K], bins=bins, alpha=0.6, color=KNOWN_COLOUR, label="known", density=True)
    ax.hist(norm[labels == K], bins=bins, alpha=0.6, color=UNKNOWN_COLOUR, label="unknown", density=True)
    ax.set_xlabel(f"normalised {scores.get('score_name', 'knownness')}")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    fig.tight_layout()

    if out_path is None:
        base = scores_path if scores_path.is_dir() else scores_path.parent
        out_path = base / PLOT_FILE
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    _log.info("score distribution → %s", out_path)
    return out_path


__all__ = ["plot_score_distributions", "normalise", "PLOT_FILE", "SCORES_FILE"]
