"""
Open-set evaluation: AUROC / OSCR, scored runs and score-distribution plots.
"""
from .evaluate import REPORT_FILE, SCORES_FILE, checkpoint_scorer, evaluate_run, load_scores
from .metrics import EvalReport, ScoredSample, aggregate, auroc, oscr
from .plots import PLOT_FILE, plot_score_distributions

__all__ = [
    "REPORT_FILE", "SCORES_FILE", "PLOT_FILE", "checkpoint_scorer", "evaluate_run",
    "load_scores", "EvalReport", "ScoredSample", "aggregate", "auroc", "oscr",
    "plot_score_distributions",
]
