"""
Checkpoints.

    <dir>/prompts.json   portable prompt parameters (shape, dtype, flat values)
    <dir>/meta.json      config digest, epoch, class names, split, threshold, ...
    <dir>/optimizer.pt   torch-serialised optimiser state (resume only)

JSON floats are written with ``repr`` precision, so float64 parameters come
back bit-identical.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import torch

from openfer.errors import CompatibilityError, ContractError
from openfer.prompting import PromptState, init_prompt_state

_log = logging.getLogger(__name__)

PROMPTS_FILE = "prompts.json"
META_FILE = "meta.json"
OPTIMIZER_FILE = "optimizer.pt"
FORMAT_VERSION = 1


@dataclass(eq=False)
class Checkpoint:
    directory: Path | None
    tensors: dict[str, torch.Tensor]
    meta: dict
    optimizer_state: dict | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def class_names(self) -> list[str]:
        return list(self.meta.get("class_names", []))


def _export(t: torch.Tensor) -> dict:
    t = t.detach().cpu()
    return {"shape": list(t.shape), "dtype": str(t.dtype).removeprefix("torch."),
            "values": t.reshape(-1).tolist()}


def _import(d: dict) -> torch.Tensor:
    dtype = getattr(torch, d["dtype"])
    return torch.tensor(d["values"], dtype=dtype).reshape(d["shape"])


def save_checkpoint(directory: str | Path, state: PromptState, meta: dict,
                    optimizer: torch.optim.Optimizer | None = None) -> Checkpoint:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tensors = {name: t.detach().clone() for name, t in state.named_tensors().items()}
    payload = {"format": FORMAT_VERSION, "tensors": {n: _export(t) for n, t in tensors.items()}}
    (directory / PROMPTS_FILE).write_text(json.dumps(payload), encoding="utf-8")
    (directory / META_FILE).write_text(json.dumps(meta, indent=2), encoding="utf-8")
    opt_state = None
    if optimizer is not None:
        opt_state = optimizer.state_dict()
        torch.save(opt_state, directory / OPTIMIZER_FILE)
    _log.info("checkpoint → %s", directory)
    return Checkpoint(directory, tensors, dict(meta), opt_state)


def load_checkpoint(directory: str | Path) -> Checkpoint:
    directory = Path(directory)
    prompts, meta = directory / PROMPTS_FILE, directory / META_FILE
    if not prompts.exists() or not meta.exists():
        raise CompatibilityError(f"not a checkpoint directory: {directory}")
    payload = json.loads(prompts.read_text(encoding="utf-8"))
    if payload.get("format") != FORMAT_VERSION:
        raise CompatibilityError(f"unsupported checkpoint format {payload.get('format')!r}")
    tensors = {n: _import(d) for n, d in payload["tensors"].items()}
    opt_path = directory / OPTIMIZER_FILE
    opt_state = torch.load(opt_path, weights_only=True) if opt_path.exists() else None
    return Checkpoint(directory, tensors, json.loads(meta.read_text(encoding="utf-8")), opt_state)


def restore_state(checkpoint: Checkpoint, encoder, prompt_section, *,
                  learn_logit_scale: bool = False) -> PromptState:
    """Rebuild a `PromptState` with the checkpoint's parameter values."""
    meta = checkpoint.meta
    state = init_prompt_state(
        meta["class_names"], encoder, prompt_section,
        frames_per_video=int(meta.get("frames_per_video", 1)),
        learn_logit_scale=learn_logit_scale, seed=int(meta.get("seed", 0)),
    )
    try:
        return state.load_tensors(checkpoint.tensors)
    except ContractError as exc:
        raise CompatibilityError(f"checkpoint does not fit the configured prompts:\n{exc}") from exc
