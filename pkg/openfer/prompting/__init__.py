"""
Learnable prompts around a frozen dual encoder.

• text   – per-class learnable contexts and fixed negative sentences
• visual – saliency rectangle, pixel patch, temporal pooling, negative bank
• state  – the full set of prompt parameters the optimiser updates
"""
from .state import PromptState, init_prompt_state
from .text import (
    PromptSet, TextContext, build_known_prompt, build_prompt_set, encode_known_prompts,
    encode_learnable_negative_prompts, encode_negative_prompts, init_context,
    negative_prompt_text,
)
from .visual import (
    MaskRect, NegativeVisualBank, VisualPatch, apply_padding_prompt, apply_visual_prompt,
    encode_negative_bank, encode_video, encode_videos, init_negative_bank, init_patch,
    locate_mask, random_rect, window_sums,
)

__all__ = [
    "PromptState", "init_prompt_state",
    "PromptSet", "TextContext", "build_known_prompt", "build_prompt_set",
    "encode_known_prompts", "encode_learnable_negative_prompts", "encode_negative_prompts",
    "init_context", "negative_prompt_text",
    "MaskRect", "NegativeVisualBank", "VisualPatch", "apply_padding_prompt",
    "apply_visual_prompt", "encode_negative_bank", "encode_video", "encode_videos",
    "init_negative_bank", "init_patch", "locate_mask", "random_rect", "window_sums",
]
