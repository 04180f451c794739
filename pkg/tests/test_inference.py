import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from openfer.errors import CalibrationError, ContractError
from openfer.learning import (
    ScoreBundle, calibrate_threshold, classify_open, fuse, prediction_known, prediction_negative,
    score_batch,
)


def _unit(n, d, seed):
    return F.normalize(torch.randn(n, d, generator=torch.Generator().manual_seed(seed),
                                   dtype=torch.float64), dim=1)


def _bundle(p_h):
    p_h = torch.as_tensor(p_h, dtype=torch.float64)
    return ScoreBundle(p_h, p_h, p_h, p_h.max(dim=1).values)


# ── known-branch probabilities ────────────────────────────────────────────
def test_prediction_known_one_hot():
    text = torch.eye(5, 8, dtype=torch.float64)
    P = prediction_known(text[:1], text, 100.0)
    assert float(P[0, 0]) > 0.999


def test_prediction_known_uniform_on_equal_cosines():
    text = torch.eye(4, 8, dtype=torch.float64)
    video = torch.zeros(1, 8, dtype=torch.float64)
    video[0, 6] = 1.0
    assert torch.allclose(prediction_known(video, text, 100.0), torch.full((1, 4), 0.25, dtype=torch.float64))


def test_prediction_known_width_mismatch():
    with pytest.raises(ContractError):
        prediction_known(_unit(2, 8, 0), _unit(3, 7, 1), 100.0)


def test_argmax_survives_scale_and_rotation():
    video, text = _unit(10, 8, 0), _unit(5, 8, 1)
    base = prediction_known(video, text, 100.0)
    assert torch.equal(base.argmax(1), prediction_known(video, text, 3.0).argmax(1))
    q, _ = torch.linalg.qr(torch.randn(8, 8, generator=torch.Generator().manual_seed(2), dtype=torch.float64))
    assert torch.allclose(prediction_known(video @ q, text @ q, 100.0), base, atol=1e-10)


# ── negative-branch probabilities ─────────────────────────────────────────
def test_prediction_negative_equidistant_is_uniform():
    negatives = torch.eye(8, dtype=torch.float64)[1:5]
    video = torch.eye(8, dtype=torch.float64)[:1]
    assert torch.allclose(prediction_negative(video, negatives), torch.full((1, 4), 0.25, dtype=torch.float64))


def test_prediction_negative_coincident_gets_row_minimum():
    negatives = _unit(4, 8, 3)
    P = prediction_negative(negatives[2:3], negatives)
    assert int(P.argmin()) == 2


def test_prediction_negative_survives_rotation_and_shift():
    video, negatives = _unit(10, 8, 6), _unit(5, 8, 7)
    base = prediction_negative(video, negatives)
    q, _ = torch.linalg.qr(torch.randn(8, 8, generator=torch.Generator().manual_seed(8), dtype=torch.float64))
    assert torch.allclose(prediction_negative(video @ q, negatives @ q), base, atol=1e-10)
    shift = torch.full((1, 8), 0.3, dtype=torch.float64)
    assert torch.allclose(prediction_negative(video + shift, negatives + shift), base, atol=1e-10)


def test_prediction_negative_matches_closed_form():
    video, negatives = _unit(6, 8, 4), _unit(5, 8, 5)
    dist = torch.sqrt(2 - 2 * video @ negatives.T)
    assert torch.allclose(prediction_negative(video, negatives, 10.0), torch.softmax(10.0 * dist, 1),
                          atol=1e-9)
    flipped = prediction_negative(video, negatives, 10.0, sign=-1)
    assert torch.allclose(flipped, torch.softmax(-10.0 * dist, 1), atol=1e-9)


def test_prediction_negative_gradient_at_coincidence_is_finite():
    negatives = _unit(3, 8, 6)
    video = negatives[:1].clone().requires_grad_(True)
    prediction_negative(video, negatives)[0, 1].backward()
    assert torch.isfinite(video.grad).all()


# ── fusion ────────────────────────────────────────────────────────────────
def test_fuse_examples():
    p = torch.softmax(torch.randn(3, 5, dtype=torch.float64), 1)
    assert torch.allclose(fuse(p, p), p)
    K = 5
    one_hot = torch.zeros(1, K, dtype=torch.float64)
    one_hot[0, 3] = 1.0
    fused = fuse(one_hot, torch.full((1, K), 1 / K, dtype=torch.float64))
    assert float(fused[0, 3]) == pytest.approx(0.5 + 1 / (2 * K))
    with pytest.raises(ContractError):
        fuse(p, p[:, :4])


def test_probability_contract_over_random_batches():
    gen = torch.Generator().manual_seed(7)
    for _ in range(1000):
        K = int(torch.randint(2, 9, (1,), generator=gen))
        video = F.normalize(torch.randn(4, 16, generator=gen, dtype=torch.float64), dim=1)
        text = F.normalize(torch.randn(K, 16, generator=gen, dtype=torch.float64), dim=1)
        neg = F.normalize(torch.randn(K, 16, generator=gen, dtype=torch.float64), dim=1)
        b = score_batch(video, text, neg, 100.0)
        for P in (b.p_kn, b.p_ne, b.p_h):
            assert (P >= 0).all() and torch.allclose(P.sum(1), torch.ones(4, dtype=torch.float64))
        assert ((b.knownness >= 1 / K - 1e-12) & (b.knownness <= 1 + 1e-12)).all()


def test_bundle_concat():
    a = _bundle([[0.6, 0.4]])
    both = ScoreBundle.concat([a, _bundle([[0.1, 0.9], [0.5, 0.5]])])
    assert len(both) == 3 and both.K == 2
    assert both.knownness.tolist() == pytest.approx([0.6, 0.9, 0.5])


# ── thresholding ──────────────────────────────────────────────────────────
def test_threshold_linear_quantile():
    scores = [round(0.1 * i, 1) for i in range(1, 11)]
    assert calibrate_threshold(scores, 0.95) == pytest.approx(0.145, abs=1e-9)
    assert calibrate_threshold([0.42] * 7, 0.95) == pytest.approx(0.42)
    assert calibrate_threshold([1, 2, 3, 4, 5], 0.5) == pytest.approx(3.0)


def test_threshold_errors():
    with pytest.raises(CalibrationError):
        calibrate_threshold([], 0.95)
    with pytest.raises(CalibrationError):
        calibrate_threshold([0.5], 1.0)
    with pytest.raises(CalibrationError):
        calibrate_threshold([0.5, math.nan], 0.95)


def test_classify_open_rules():
    decisions = classify_open(_bundle([[0.05, 0.05, 0.9], [0.3, 0.3, 0.4], [0.5, 0.5, 0.0]]), 0.5)
    assert [d.predicted for d in decisions] == [2, 3, 0]
    assert decisions[2].score == pytest.approx(0.5)
    assert all(d.threshold == 0.5 for d in decisions)


def test_raising_the_threshold_never_admits_an_unknown():
    rng = np.random.default_rng(1)
    p_h = rng.dirichlet(np.ones(5), size=200)
    bundle = _bundle(p_h)
    K = bundle.K
    previous = None
    for tau in np.linspace(0.0, 1.0, 41):
        unknown = np.array([d.predicted == K for d in classify_open(bundle, float(tau))])
        if previous is not None:
            assert not (previous & ~unknown).any()
        previous = unknown
    assert previous.all()


def test_threshold_keeps_target_share_of_known():
    rng = np.random.default_rng(0)
    known = rng.uniform(0.3, 1.0, size=400)
    tau = calibrate_threshold(known, 0.95)
    assert (known >= tau).mean() == pytest.approx(0.95, abs=0.01)
