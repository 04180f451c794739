import pytest

from openfer.learning import run_gradcheck
from openfer.learning.gradcheck import (
    check_cross_entropy, check_negative_alignment, check_supervised_contrastive, relative_error,
)
from openfer.utils.paths import RunConfig


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1.0, 1.1) == pytest.approx(0.1 / 1.1)


@pytest.mark.parametrize("check", [check_cross_entropy, check_supervised_contrastive,
                                   check_negative_alignment])
def test_loss_terms_match_finite_differences(check):
    result = check()
    assert result.tolerance <= 1e-4
    assert result.passed, (result.name, result.max_error)


def test_full_objective_gradient():
    results = {r.name: r for r in run_gradcheck(RunConfig(), directions=20)}
    assert all(r.passed for r in results.values()), {n: r.max_error for n, r in results.items()}
    total = [r for n, r in results.items() if "total" in n]
    assert total and total[0].tolerance <= 1e-3
