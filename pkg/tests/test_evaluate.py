import json

import numpy as np
import pytest
import torch

from openfer.errors import CalibrationError, CompatibilityError, PlotError
from openfer.evaluation import (
    PLOT_FILE, REPORT_FILE, SCORES_FILE, evaluate_run, load_scores, plot_score_distributions,
)
from openfer.evaluation.plots import normalise
from openfer.ingest import UNKNOWN, OpennessSplit, apply_split
from openfer.learning import Checkpoint, ScoreBundle, train

SPLIT = OpennessSplit.of((0, 1, 2, 3, 4), (5, 6), 11)


@pytest.fixture
def open_set(small_dataset):
    return apply_split(small_dataset, SPLIT)[1]


def _checkpoint(names, threshold=0.5):
    meta = {"class_names": list(names), "split": SPLIT.to_dict()}
    if threshold is not None:
        meta["threshold"] = threshold
    return Checkpoint(None, {}, meta)


def oracle_scorer(dataset):
    """Knownness 1 with the right class for knowns, 0 for unknowns."""
    K = len(dataset.class_names) - 1
    p_h = torch.full((len(dataset), K), 1.0 / K, dtype=torch.float64)
    knownness = torch.zeros(len(dataset), dtype=torch.float64)
    for i, y in enumerate(dataset.labels):
        if y < K:
            p_h[i] = 0.0
            p_h[i, y] = 1.0
            knownness[i] = 1.0
    return ScoreBundle(p_h, p_h, p_h, knownness)


def test_oracle_scorer_scores_perfectly(small_config, open_set, tmp_path):
    names = open_set.class_names[:-1]
    report = evaluate_run(small_config, _checkpoint(names), open_set, scorer=oracle_scorer,
                          out_dir=tmp_path)
    assert report.auroc == 1.0 and report.oscr == pytest.approx(1.0)
    assert report.open_accuracy == 1.0 and report.closed_accuracy == 1.0
    assert report.n_known + report.n_unknown == len(open_set)
    assert report.split["unknown_classes"] == [5, 6]

    scores = load_scores(tmp_path)
    assert len(scores["rows"]) == len(open_set)
    assert scores["class_names"][-1] == UNKNOWN
    assert {r["label"] for r in scores["rows"]} == set(range(6))
    assert json.loads((tmp_path / REPORT_FILE).read_text())["score_name"] == "max_p_h"


def test_evaluate_rejects_mismatch_and_missing_threshold(small_config, open_set, tmp_path):
    names = list(open_set.class_names[:-1])
    with pytest.raises(CompatibilityError):
        evaluate_run(small_config, _checkpoint(names[::-1]), open_set, scorer=oracle_scorer,
                     out_dir=tmp_path)
    with pytest.raises(CalibrationError):
        evaluate_run(small_config, _checkpoint(names, None), open_set, scorer=oracle_scorer,
                     out_dir=tmp_path)


def test_evaluate_trained_checkpoint(small_config, small_dataset, small_encoder, tmp_path):
    train_set, open_set = apply_split(small_dataset, SPLIT)
    ckpt = train(small_config, train_set, run_dir=tmp_path / "r", split=SPLIT, encoder=small_encoder)
    report = evaluate_run(small_config, ckpt, open_set, out_dir=tmp_path / "r",
                          encoder=small_encoder)
    assert 0.0 <= report.oscr <= 1.0 and 0.0 <= report.auroc <= 1.0
    assert report.threshold == ckpt.meta["threshold"]
    assert set(report.masks) == {s.id for s in open_set}
    assert all(len(m) == 3 and m[2] == 8 for m in report.masks.values())
    assert (tmp_path / "r" / SCORES_FILE).exists()


# ── plots ─────────────────────────────────────────────────────────────────
def test_plot_written_next_to_scores(small_config, open_set, tmp_path):
    evaluate_run(small_config, _checkpoint(open_set.class_names[:-1]), open_set,
                 scorer=oracle_scorer, out_dir=tmp_path)
    out = plot_score_distributions(tmp_path / SCORES_FILE)
    assert out == tmp_path / PLOT_FILE and out.stat().st_size > 0


def test_plot_needs_both_populations(tmp_path):
    fp = tmp_path / SCORES_FILE
    fp.write_text(json.dumps({"class_names": ["a", "b", UNKNOWN], "rows": [
        {"label": 0, "knownness": 0.9}, {"label": 1, "knownness": 0.7}]}))
    with pytest.raises(PlotError):
        plot_score_distributions(fp)
    with pytest.raises(PlotError):
        plot_score_distributions(tmp_path / "missing.json")


def test_normalise():
    assert normalise(np.array([2.0, 4.0, 3.0])).tolist() == [0.0, 1.0, 0.5]
    assert normalise(np.full(4, 0.3)).tolist() == [0.0] * 4
