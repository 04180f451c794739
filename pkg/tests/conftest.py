# ---- path shim: make parent folder importable ---------------------------
import pathlib, sys, os
TEST_DIR = pathlib.Path(__file__).resolve().parent
PROJECT_ROOT = TEST_DIR.parent
sys.path.insert(0, str(PROJECT_ROOT))
# -------------------------------------------------------------------------

import pytest
import torch

from openfer.encoders import MockDualEncoder
from openfer.ingest import SyntheticSpec, synthesize_dataset
from openfer.utils.paths import RunConfig, with_values

SMALL_SHAPE = (3, 32, 32)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, needs OPENFER_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("OPENFER_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set OPENFER_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def encoder():
    """Default float64 mock: d=32, 64×64 frames."""
    return MockDualEncoder()


@pytest.fixture(scope="session")
def small_encoder():
    return MockDualEncoder(frame_shape=SMALL_SHAPE)


@pytest.fixture(scope="session")
def small_spec():
    return SyntheticSpec(num_classes=7, videos_per_class=6, frames_per_video=4,
                         frame_shape=SMALL_SHAPE, noise_level=0.05, seed=1)


@pytest.fixture(scope="session")
def small_dataset(small_spec):
    return synthesize_dataset(small_spec)


@pytest.fixture
def small_config(tmp_path):
    """Two-epoch desk config over 32×32 synthetic videos, writing under tmp_path."""
    base = RunConfig()
    return with_values(
        base,
        run={"output_dir": tmp_path / "runs", "name": "t", "save_every": 1},
        data={"frames_per_video": 4,
              "synthetic": type(base.data.synthetic)(
                  num_classes=7, videos_per_class=6, frames_per_video=4,
                  frame_shape=SMALL_SHAPE, noise_level=0.05, seed=1)},
        optim={"epochs": 2, "batch_size": 8},
        prompt={"patch_size": 8, "pad_width": 2},
        protocol={"task": "custom", "known": 5, "unknown": 2, "repeats": 1},
    )


@pytest.fixture
def rng():
    return torch.Generator().manual_seed(0)
