"""
Utility that

1. Loads `config.yaml`
2. Expands environment variables like  ${HOME}
3. Converts any value that looks like an absolute path into `pathlib.Path`
4. Exposes a frozen `RunConfig` dataclass built from one section
   dataclass per top-level YAML block.

All other modules import *only* from this file, never from `yaml` directly
→ a single point of maintenance when new parameters are added.
"""
from __future__ import annotations

import dataclasses
import hashlib
import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable

import yaml

from openfer.errors import ConfigError

PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_CONFIG = PROJECT_ROOT / "config.yaml"

ABS_WIN = re.compile(r"^[A-Za-z]:[\\/].*")   # e.g. C:\ or D:/


def _looks_like_path(val: str) -> bool:
    return val.startswith("/") or bool(ABS_WIN.match(val))


# ── sections ───────────────────────────────────────────────────────────────
@dataclass(slots=True, frozen=True)
class RunSection:
    output_dir: Path = Path("runs")
    name: str = "desk"
    save_every: int = 10
    seed: int = 0


@dataclass(slots=True, frozen=True)
class EncoderSection:
    kind: str = "mock"
    dtype: str = "float64"
    seed: int = 1234
    embed_dim: int = 32
    token_dim: int = 64
    pool: int = 4
    position_encoding: bool = True
    logit_scale: float = 100.0
    model_name: str = "ViT-B-16"
    weights: str = ""


@dataclass(slots=True, frozen=True)
class SyntheticSection:
    num_classes: int = 7
    videos_per_class: int = 20
    frames_per_video: int = 8
    frame_shape: tuple[int, int, int] = (3, 64, 64)
    noise_level: float = 0.05
    seed: int = 1


@dataclass(slots=True, frozen=True)
class DataSection:
    source: str = "synthetic"
    manifests: tuple[Path, ...] = ()
    frames_per_video: int = 16
    holdout_fraction: float = 0.1
    test_fraction: float = 0.2
    synthetic: SyntheticSection = field(default_factory=SyntheticSection)


@dataclass(slots=True, frozen=True)
class ProtocolSection:
    task: str = "custom"
    known: int = 5
    unknown: int = 2
    repeats: int = 5
    fixed_repeats: int = 1
    seed: int = 42


@dataclass(slots=True, frozen=True)
class OptimSection:
    lr: float = 0.01
    momentum: float = 0.9
    decay_factor: float = 0.1
    decay_every: int = 30
    epochs: int = 200
    batch_size: int = 16


@dataclass(slots=True, frozen=True)
class PromptSection:
    modules: str = "tp+vp"
    context_length: int = 16
    ctx_init_std: float = 0.02
    negative_text: str = "fixed"
    visual_prompt_style: str = "masked_patch"
    patch_size: int = 56
    patch_mode: str = "additive"
    patch_per_frame: bool = False
    pad_width: int = 30


@dataclass(slots=True, frozen=True)
class LossSection:
    weights: dict = field(default_factory=lambda: {
        "kn_ce": 1.0, "kn_cl": 1.0, "ne_ce": 1.0, "ne_clip": 1.0, "h": 1.0})
    supcon_tau: float = 0.07
    ne_supcon: bool = False
    learn_logit_scale: bool = False


@dataclass(slots=True, frozen=True)
class EvalSection:
    ne_scale: float = 10.0
    ne_logit_sign: int = 1
    target_tpr: float = 0.95
    batch_size: int = 32


@dataclass(slots=True, frozen=True)
class ApiSection:
    host: str = "0.0.0.0"
    port: int = 8080


_SECTIONS: dict[str, type] = {
    "run": RunSection,
    "encoder": EncoderSection,
    "data": DataSection,
    "protocol": ProtocolSection,
    "optim": OptimSection,
    "prompt": PromptSection,
    "loss": LossSection,
    "eval": EvalSection,
    "api": ApiSection,
}

_CHOICES = {
    ("encoder", "kind"): {"mock", "external"},
    ("encoder", "dtype"): {"float32", "float64"},
    ("data", "source"): {"synthetic", "manifest"},
    ("protocol", "task"): {"1", "2", "3", "4", "custom"},
    ("prompt", "modules"): {"tp", "tp+vp"},
    ("prompt", "negative_text"): {"fixed", "learnable"},
    ("prompt", "visual_prompt_style"): {"masked_patch", "padding", "random_patch"},
    ("prompt", "patch_mode"): {"additive", "replace"},
    ("eval", "ne_logit_sign"): {1, -1},
}

LOSS_TERMS = ("kn_ce", "kn_cl", "ne_ce", "ne_clip", "h")


@dataclass(slots=True, frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    encoder: EncoderSection = field(default_factory=EncoderSection)
    data: DataSection = field(default_factory=DataSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    optim: OptimSection = field(default_factory=OptimSection)
    prompt: PromptSection = field(default_factory=PromptSection)
    loss: LossSection = field(default_factory=LossSection)
    eval: EvalSection = field(default_factory=EvalSection)
    api: ApiSection = field(default_factory=ApiSection)

    def validate(self) -> "RunConfig":
        """Raise ConfigError on the first violated invariant; return self."""
        for (section, key), allowed in _CHOICES.items():
            value = getattr(getattr(self, section), key)
            if value not in allowed:
                raise ConfigError(f"{section}.{key}={value!r} not in {sorted(map(str, allowed))}")
        if not self.optim.lr > 0:
            raise ConfigError(f"optim.lr must be > 0, got {self.optim.lr}")
        if self.optim.epochs < 1:
            raise ConfigError(f"optim.epochs must be >= 1, got {self.optim.epochs}")
        if self.run.save_every < 1:
            raise ConfigError(f"run.save_every must be >= 1, got {self.run.save_every}")
        if self.protocol.repeats < 1 or self.protocol.fixed_repeats < 1:
            raise ConfigError("protocol.repeats and protocol.fixed_repeats must be >= 1")
        if self.optim.batch_size < 2:
            raise ConfigError("optim.batch_size must be >= 2 (contrastive term needs pairs)")
        if self.optim.decay_every < 1 or not 0 < self.optim.decay_factor <= 1:
            raise ConfigError("optim.decay_every must be >= 1 and 0 < optim.decay_factor <= 1")
        if self.prompt.context_length < 1 or self.prompt.patch_size < 1:
            raise ConfigError("prompt.context_length and prompt.patch_size must be positive")
        if not 0 < self.eval.target_tpr < 1:
            raise ConfigError(f"eval.target_tpr must be in (0,1), got {self.eval.target_tpr}")
        if self.eval.ne_scale <= 0 or self.loss.supcon_tau <= 0:
            raise ConfigError("eval.ne_scale and loss.supcon_tau must be > 0")
        if set(self.loss.weights) != set(LOSS_TERMS):
            raise ConfigError(f"loss.weights must name exactly {LOSS_TERMS}")
        if any(w < 0 for w in self.loss.weights.values()):
            raise ConfigError("loss.weights must be non-negative")
        if not 0 < self.data.holdout_fraction < 1 or not 0 < self.data.test_fraction < 1:
            raise ConfigError("data.holdout_fraction and data.test_fraction must be in (0,1)")
        if self.data.source == "manifest":
            if not self.data.manifests:
                raise ConfigError("data.source=manifest but data.manifests is empty")
            for p in self.data.manifests:
                if not Path(p).exists():
                    raise ConfigError(f"manifest not found: {p}")
        if self.encoder.kind == "external" and self.encoder.weights:
            w = self.encoder.weights
            if not w.startswith(("http://", "https://")) and not Path(w).exists():
                raise ConfigError(f"encoder.weights not found: {w}")
        return self


# ── parsing ────────────────────────────────────────────────────────────────
def _coerce(cls: type, raw: dict, where: str):
    """Build section dataclass *cls* from a raw mapping, rejecting unknown keys."""
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for name, value in raw.items():
        default = getattr(cls(), name)
        if dataclasses.is_dataclass(default):
            kwargs[name] = _coerce(type(default), value or {}, f"{where}.{name}")
        elif isinstance(default, Path):
            kwargs[name] = _to_path(value)
        elif isinstance(default, tuple):
            if isinstance(value, (str, Path)):
                value = [value]
            items = tuple(value or ())
            kwargs[name] = tuple(_to_path(v) for v in items) if name == "manifests" else tuple(items)
        elif isinstance(default, bool):
            kwargs[name] = bool(value)
        elif isinstance(default, int) and not isinstance(value, bool):
            kwargs[name] = int(value)
        elif isinstance(default, float):
            kwargs[name] = float(value)
        elif isinstance(default, str):
            kwargs[name] = str(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def _to_path(val) -> Path:
    p = Path(os.path.expanduser(os.path.expandvars(str(val))))
    if not (_looks_like_path(str(p)) or p.is_absolute()):
        p = PROJECT_ROOT / p
    return p


def from_mapping(cfg: dict) -> RunConfig:
    unknown = set(cfg) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    return RunConfig(**{
        name: _coerce(cls, cfg.get(name) or {}, name)
        for name, cls in _SECTIONS.items()
    })


def load_config(cfg_path: str | Path | None = None,
                overrides: Iterable[tuple[str, str]] = ()) -> RunConfig:
    """
    Parse YAML (environment variables expanded beforehand), apply
    ``section.key`` overrides and return the frozen config.
    """
    cfg_path = Path(cfg_path) if cfg_path else DEFAULT_CONFIG
    if not cfg_path.exists():
        raise ConfigError(f"config file not found: {cfg_path}")
    text = os.path.expandvars(cfg_path.read_text(encoding="utf-8"))
    cfg = yaml.safe_load(text) or {}
    return apply_overrides(from_mapping(cfg), overrides)


def apply_overrides(conf: RunConfig, overrides: Iterable[tuple[str, str]]) -> RunConfig:
    """``[("optim.lr", "0.1"), ("data.synthetic.seed", "3")]`` → new RunConfig."""
    raw = to_mapping(conf)
    for dotted, text in overrides:
        parts = dotted.split(".")
        node = raw
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"unknown override key: {dotted}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override key: {dotted}")
        node[parts[-1]] = yaml.safe_load(text) if isinstance(text, str) else text
    return from_mapping(raw)


def with_values(conf: RunConfig, **sections: dict) -> RunConfig:
    """Programmatic override: ``with_values(conf, optim={"epochs": 2})``."""
    return replace(conf, **{
        name: replace(getattr(conf, name), **values) for name, values in sections.items()
    })


def to_mapping(conf: RunConfig) -> dict:
    def _plain(v):
        if isinstance(v, Path):
            return str(v)
        if isinstance(v, tuple):
            return [_plain(x) for x in v]
        if isinstance(v, dict):
            return {k: _plain(x) for k, x in v.items()}
        return v
    return _plain(dataclasses.asdict(conf))


def config_digest(conf: RunConfig) -> str:
    text = yaml.safe_dump(to_mapping(conf), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_dir(conf: RunConfig, *parts: str) -> Path:
    """`<run.output_dir>/<run.name>/<parts...>`, created on demand."""
    d = Path(conf.run.output_dir) / conf.run.name
    for p in parts:
        d = d / p
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_snapshot(conf: RunConfig, directory: Path) -> Path:
    out = Path(directory) / "config.yaml"
    out.write_text(yaml.safe_dump(to_mapping(conf), sort_keys=True), encoding="utf-8")
    return out


# ── Resolve the default config once at import time ─────────────────────────
conf = load_config() if DEFAULT_CONFIG.exists() else RunConfig()
RUNS_D = Path(conf.run.output_dir)
