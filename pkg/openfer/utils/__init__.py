"""
Expose the resolved config and helpers so downstream code can do:

    from openfer.utils import conf, load_config, run_dir
"""
from .paths import (
    RUNS_D, RunConfig, apply_overrides, conf, config_digest, load_config,
    run_dir, with_values, write_snapshot,
)

__all__ = [
    "RUNS_D", "RunConfig", "apply_overrides", "conf", "config_digest",
    "load_config", "run_dir", "with_values", "write_snapshot",
]
