"""
openfer – open-set video facial expression recognition by prompting a
frozen dual encoder
----------------------------------------------------------------------

Sub-packages:
    utils       – config + run-directory helpers
    ingest      – manifests, synthetic videos, openness splits
    encoders    – dual-encoder contract, mock, open_clip adapter
    prompting   – textual / visual prompts, negative bank
    learning    – objective, scoring, training, checkpoints
    evaluation  – AUROC / OSCR, scores files, plots
    runners     – OV-FER protocol driver
    api         – FastAPI results app

Public re-exports
-----------------
>>> from openfer import load_config, run_protocol
"""
import logging
from importlib import import_module

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"

_EXPORTS = {
    "load_config": "openfer.utils.paths",
    "synthesize_dataset": "openfer.ingest",
    "train": "openfer.learning",
    "evaluate_run": "openfer.evaluation",
    "run_protocol": "openfer.runners",
}

__all__ = list(_EXPORTS)


def __getattr__(name: str):
    # call-throughs resolve lazily so `import openfer` stays cheap
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module 'openfer' has no attribute {name!r}")
