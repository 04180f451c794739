"""
External dual encoder: a thin adapter over a pretrained open_clip model.

Text path (CoOp style): ``[SOS] ++ tokens ++ [EOT]`` padded to the model's
context length, plus positional embedding, through the text transformer; the
EOT position is projected into the joint space.

Visual path: frames arrive in [0, 1] and are normalised here with the
model's mean/std.  The CAM feature map comes from the last spatial stage:
``layer4`` for ResNet towers (channel weights = attention-pool output
projection averaged over output dims) or the patch-token grid for ViT towers
(channel weights = ``proj`` averaged over output dims).

Weights can be a local checkpoint path or an http(s) URL; URLs are fetched
once into the run cache.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path

import requests
import torch

from openfer.encoders.base import DualEncoder
from openfer.errors import ContractError, WeightsDownloadError

_log = logging.getLogger(__name__)
logging.getLogger("urllib3").setLevel(logging.WARNING)

TIMEOUT = 60        # seconds per HTTP request
CLIP_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_STD = (0.26862954, 0.26130258, 0.27577711)


def _ensure_ok(resp: requests.Response):
    """Raise for non‑2xx with a readable message."""
    try:
        resp.raise_for_status()
    except requests.HTTPError as exc:
        raise WeightsDownloadError(f"weights download failed ({resp.status_code}): {resp.url}") from exc


def fetch_weights(url: str, cache_dir: Path) -> Path:
    """Download ``url`` into ``cache_dir`` unless a file of that name is already there."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    out = cache_dir / url.rstrip("/").split("/")[-1]
    if out.exists():
        return out
    _log.info("downloading encoder weights %s", url)
    with requests.get(url, stream=True, timeout=TIMEOUT) as resp:
        _ensure_ok(resp)
        tmp = out.with_suffix(out.suffix + ".part")
        try:
            with tmp.open("wb") as fh:
                for chunk in resp.iter_content(chunk_size=1 << 20):
                    fh.write(chunk)
        except Exception:
            tmp.unlink(missing_ok=True)
            raise
        tmp.replace(out)
    return out


class OpenClipEncoder(DualEncoder):

    def __init__(self, model_name: str = "ViT-B-16", weights: str | Path = "",
                 frame_side: int = 224, cache_dir: Path | None = None):
        super().__init__()
        import open_clip

        pretrained = str(weights) if weights else None
        if pretrained and pretrained.startswith(("http://", "https://")):
            pretrained = str(fetch_weights(pretrained, cache_dir or Path.home() / ".cache" / "openfer"))
        model = open_clip.create_model(model_name, pretrained=pretrained)
        model.eval().requires_grad_(False)
        self.model = model
        self._tokenizer = open_clip.get_tokenizer(model_name)
        self.dtype = torch.float32
        self.token_dim = model.token_embedding.weight.shape[1]
        self.embed_dim = model.text_projection.shape[1]
        self.frame_shape = (3, frame_side, frame_side)
        self.logit_scale = float(model.logit_scale.exp())
        self.pixel_range = (0.0, 1.0)
        self.register_buffer("mean", torch.tensor(CLIP_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(CLIP_STD).view(1, 3, 1, 1))
        self._is_resnet = hasattr(model.visual, "layer4")

    # ── text ──────────────────────────────────────────────────────────────
    def _ids(self, text: str) -> torch.Tensor:
        ids = self._tokenizer([text])[0]
        eot = int(ids.argmax())                    # EOT has the largest id
        return ids[1:eot]

    def tokenize(self, text: str) -> torch.Tensor:
        if not text.strip():
            raise ContractError("cannot tokenize an empty string")
        with torch.no_grad():
            return self.model.token_embedding(self._ids(text)).float()

    def _text(self, tokens: torch.Tensor) -> torch.Tensor:
        m = self.model
        ctx_len = m.positional_embedding.shape[0]
        if tokens.shape[0] + 2 > ctx_len:
            raise ContractError(f"{tokens.shape[0]} tokens exceed context length {ctx_len - 2}")
        ids = self._tokenizer([""])[0]             # [SOS, EOT, 0, ...]
        sos = m.token_embedding(ids[:1])
        eot = m.token_embedding(ids[1:2])
        pad = m.token_embedding(torch.zeros(ctx_len - tokens.shape[0] - 2, dtype=torch.long))
        x = torch.cat([sos, tokens.to(sos.dtype), eot, pad]).unsqueeze(0) + m.positional_embedding
        batch_first = getattr(m.transformer, "batch_first", False)
        x = m.transformer(x if batch_first else x.permute(1, 0, 2), attn_mask=m.attn_mask)
        x = x if batch_first else x.permute(1, 0, 2)
        x = m.ln_final(x)
        return x[0, tokens.shape[0] + 1] @ m.text_projection

    # ── visual ────────────────────────────────────────────────────────────
    def _frames(self, frames: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        v = self.model.visual
        x = (frames - self.mean) / self.std
        captured: dict[str, torch.Tensor] = {}
        stage = v.layer4 if self._is_resnet else v.transformer
        hook = stage.register_forward_hook(lambda _m, _i, out: captured.setdefault("out", out))
        try:
            emb = v(x)
        finally:
            hook.remove()
        out = captured["out"]
        if self._is_resnet:
            fmap = out
        else:
            tokens = out if getattr(v.transformer, "batch_first", True) else out.permute(1, 0, 2)
            patches = v.ln_post(tokens[:, 1:, :])
            g = int(math.isqrt(patches.shape[1]))
            fmap = patches.transpose(1, 2).reshape(patches.shape[0], -1, g, g)
        return emb, fmap

    def cam_weights(self) -> torch.Tensor:
        v = self.model.visual
        if self._is_resnet:
            return v.attnpool.c_proj.weight.mean(dim=0)
        return v.proj.mean(dim=1)
