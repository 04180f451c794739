"""
Textual prompts.

Known class k is described by ``[t¹(k) … tᴹ(k)] ++ tokens(class name k)``
where the M context vectors are learnable and class-specific.  Negative
class k is the fixed sentence ``"This video is not <class name k>"``.
Every prompt is encoded on its own; outputs are L2-normalised rows.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from openfer.encoders.base import DualEncoder
from openfer.errors import ContractError

NEGATIVE_TEMPLATE = "This video is not {}"


@dataclass(eq=False)
class TextContext:
    vectors: torch.Tensor          # K × M × token_dim, requires_grad

    @property
    def K(self) -> int:
        return self.vectors.shape[0]

    @property
    def M(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class PromptSet:
    known_prompts: tuple[torch.Tensor, ...]
    negative_prompts: tuple[str, ...]


def init_context(K: int, M: int, token_dim: int, seed: int, std: float = 0.02,
                 dtype: torch.dtype = torch.float64) -> TextContext:
    if min(K, M, token_dim) < 1:
        raise ContractError(f"K, M, token_dim must be positive, got {(K, M, token_dim)}")
    gen = torch.Generator().manual_seed(seed)
    vectors = torch.randn(K, M, token_dim, generator=gen, dtype=dtype) * std
    return TextContext(vectors.requires_grad_(True))


def negative_prompt_text(class_name: str) -> str:
    return NEGATIVE_TEMPLATE.format(class_name.lower())


def build_known_prompt(context: TextContext, k: int, class_name: str,
                       encoder: DualEncoder) -> torch.Tensor:
    if not 0 <= k < context.K:
        raise IndexError(f"class index {k} outside {context.K} contexts")
    class_tokens = encoder.tokenize(class_name).to(context.vectors.dtype)
    return torch.cat([context.vectors[k], class_tokens], dim=0)


def build_prompt_set(context: TextContext, class_names, encoder: DualEncoder) -> PromptSet:
    return PromptSet(
        tuple(build_known_prompt(context, k, n, encoder) for k, n in enumerate(class_names)),
        tuple(negative_prompt_text(n) for n in class_names),
    )


def encode_known_prompts(context: TextContext, class_names, encoder: DualEncoder) -> torch.Tensor:
    """K × d unit rows (F_T'), one independent encoding per class."""
    if len(class_names) != context.K:
        raise ContractError(f"{len(class_names)} class names for {context.K} contexts")
    rows = [encoder.encode_text(build_known_prompt(context, k, n, encoder))
            for k, n in enumerate(class_names)]
    return F.normalize(torch.stack(rows), dim=-1)


_NEG_CACHE: "weakref.WeakKeyDictionary[DualEncoder, dict]" = weakref.WeakKeyDictionary()


def encode_negative_prompts(class_names, encoder: DualEncoder) -> torch.Tensor:
    """K × d unit rows (F̄_T') of the fixed negative sentences; cached per name list."""
    cache = _NEG_CACHE.setdefault(encoder, {})
    key = tuple(class_names)
    if key not in cache:
        with torch.no_grad():
            rows = [encoder.encode_text(encoder.tokenize(negative_prompt_text(n))) for n in key]
        cache[key] = F.normalize(torch.stack(rows), dim=-1)
    return cache[key]


def encode_learnable_negative_prompts(context: TextContext, class_names,
                                      encoder: DualEncoder) -> torch.Tensor:
    """Ablation: ``[learnable context] ++ tokens("not <name>")`` per class."""
    rows = []
    for k, name in enumerate(class_names):
        tail = encoder.tokenize(f"not {name.lower()}").to(context.vectors.dtype)
        rows.append(encoder.encode_text(torch.cat([context.vectors[k], tail], dim=0)))
    return F.normalize(torch.stack(rows), dim=-1)
