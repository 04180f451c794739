"""Desk-scale learnability; opt in with OPENFER_SLOW=1."""
import numpy as np
import pytest

from openfer.runners import run_protocol
from openfer.utils.paths import SyntheticSection, with_values

SEEDS = (0, 1, 2)
CE_ONLY = {"kn_ce": 1.0, "kn_cl": 0.0, "ne_ce": 0.0, "ne_clip": 0.0, "h": 0.0}


def _config(small_config, seed, weights=None):
    cfg = with_values(
        small_config,
        run={"seed": seed, "name": f"seed{seed}", "save_every": 40},
        data={"frames_per_video": 8,
              "synthetic": SyntheticSection(num_classes=7, videos_per_class=20, frames_per_video=8,
                                            frame_shape=(3, 32, 32), noise_level=0.05, seed=1)},
        optim={"epochs": 40, "batch_size": 16},
        protocol={"task": "custom", "known": 5, "unknown": 2, "repeats": 1, "seed": 42 + seed},
    )
    if weights is not None:
        cfg = with_values(cfg, loss={"weights": weights}, run={"name": f"ce_seed{seed}"})
    return cfg


@pytest.mark.slow
def test_full_objective_learns_and_beats_ce_only(small_config):
    full = [run_protocol(_config(small_config, s)).mean()[0] for s in SEEDS]
    ce = [run_protocol(_config(small_config, s, CE_ONLY)).mean()[0] for s in SEEDS]
    assert np.mean(full) >= 0.85
    assert np.mean(full) - np.mean(ce) >= 0.03
