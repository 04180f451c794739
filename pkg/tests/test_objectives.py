import math
from dataclasses import replace

import pytest
import torch
import torch.nn.functional as F

from openfer.errors import ContractError
from openfer.learning import (
    BatchFeatures, cross_entropy, negative_alignment, score_batch, supervised_contrastive,
    total_loss,
)
from openfer.utils.paths import LossSection


def _unit(n, d, seed):
    return F.normalize(torch.randn(n, d, generator=torch.Generator().manual_seed(seed),
                                   dtype=torch.float64), dim=1)


# ── cross entropy ─────────────────────────────────────────────────────────
def test_cross_entropy_uniform_rows():
    P = torch.full((4, 5), 0.2, dtype=torch.float64)
    assert float(cross_entropy(P, torch.tensor([0, 3, 4, 1]))) == pytest.approx(math.log(5), abs=1e-4)


def test_cross_entropy_one_hot_and_hand_value():
    assert float(cross_entropy(torch.eye(3, dtype=torch.float64), torch.arange(3))) <= 1e-11
    P = torch.tensor([[0.7, 0.3]], dtype=torch.float64)
    assert float(cross_entropy(P, torch.tensor([0]))) == pytest.approx(-math.log(0.7), abs=1e-5)


def test_cross_entropy_floor_and_range():
    P = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
    assert math.isfinite(float(cross_entropy(P, torch.tensor([1]))))
    with pytest.raises(ContractError):
        cross_entropy(P, torch.tensor([2]))


# ── supervised contrastive ────────────────────────────────────────────────
def test_supcon_without_positives_is_zero():
    z = _unit(4, 8, 0).requires_grad_(True)
    loss = supervised_contrastive(z, torch.arange(4))
    assert float(loss) == 0.0
    loss.backward()
    with pytest.raises(ContractError):
        supervised_contrastive(z[:1], torch.tensor([0]))


def test_supcon_three_point_hand_evaluation():
    a = torch.tensor([1.0, 0.0], dtype=torch.float64)
    b = torch.tensor([0.6, 0.8], dtype=torch.float64)
    z = torch.stack([a, a, b])
    tau = 0.07
    s_pos, s_neg = 1.0 / tau, float(a @ b) / tau
    # anchors 0 and 1 are mirror images; anchor 2 has no positive
    expected = -(s_pos - math.log(math.exp(s_pos) + math.exp(s_neg)))
    got = float(supervised_contrastive(z, torch.tensor([0, 0, 1]), tau))
    assert got == pytest.approx(expected, rel=1e-9)


def test_supcon_prefers_tight_clusters():
    y = torch.tensor([0, 0, 1, 1])
    spread = torch.tensor([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], dtype=torch.float64)
    tight = torch.tensor([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]], dtype=torch.float64)
    assert float(supervised_contrastive(tight, y)) < float(supervised_contrastive(spread, y))


def test_supcon_permutation_invariant():
    z, y = _unit(8, 6, 1), torch.tensor([0, 1, 2, 0, 1, 2, 0, 3])
    perm = torch.randperm(8, generator=torch.Generator().manual_seed(2))
    assert float(supervised_contrastive(z[perm], y[perm])) == pytest.approx(
        float(supervised_contrastive(z, y)), rel=1e-12)


# ── negative alignment ────────────────────────────────────────────────────
@pytest.mark.parametrize("K", [2, 5, 16])
def test_alignment_orthonormal_rows(K):
    rows = torch.eye(K, 16, dtype=torch.float64)
    assert float(negative_alignment(rows, rows, 100.0)) <= 1e-6


def test_alignment_permuted_is_worse():
    v = _unit(5, 8, 3)
    aligned = float(negative_alignment(v, v, 10.0))
    permuted = float(negative_alignment(v[[1, 2, 3, 4, 0]], v, 10.0))
    assert permuted > aligned


def test_alignment_uniform_logits_is_ln2():
    ones = torch.tensor([[1.0, 0.0], [1.0, 0.0]], dtype=torch.float64)
    assert float(negative_alignment(ones, ones, 7.0)) == pytest.approx(math.log(2), abs=1e-12)


def test_alignment_contract():
    with pytest.raises(ContractError):
        negative_alignment(_unit(1, 4, 0), _unit(1, 4, 1), 1.0)
    with pytest.raises(ContractError):
        negative_alignment(_unit(3, 4, 0), _unit(2, 4, 1), 1.0)


# ── total ─────────────────────────────────────────────────────────────────
def _batch(K=3, B=6, d=8):
    video = _unit(B, d, 10).requires_grad_(True)
    features = BatchFeatures(video, torch.tensor([0, 0, 1, 1, 2, 2]), _unit(K, d, 11),
                             _unit(K, d, 12), _unit(K, d, 13))
    bundle = score_batch(video, features.known_text, features.neg_visual, 100.0)
    return features, bundle


def test_total_is_sum_of_components():
    features, bundle = _batch()
    parts = total_loss(bundle, features, features.labels, LossSection(), 100.0)
    assert float(parts.total) == pytest.approx(sum(parts.as_floats()[k] for k in parts.components()),
                                               rel=1e-12)
    assert float(parts.l_ne_cl) == 0.0
    assert all(v >= 0 for v in parts.as_floats().values())


def test_total_switches():
    features, bundle = _batch()
    weights = dict(LossSection().weights, kn_cl=0.0, ne_clip=0.0)
    parts = total_loss(bundle, features, features.labels,
                       replace(LossSection(), weights=weights, ne_supcon=True), 100.0)
    assert float(parts.l_kn_cl) == 0.0 and float(parts.l_ne_clip) == 0.0
    assert float(parts.l_ne_cl) > 0.0
    parts.total.backward()
    assert features.video_embeddings.grad is not None
