"""Random-init T5 backbone built from a named architecture preset."""

from __future__ import annotations

from pathlib import Path

import torch
from transformers import T5Config, T5ForConditionalGeneration
from transformers.utils import logging as hf_logging

from .config import MODEL_PRESETS
from .vocab import EOS_ID, PAD_ID

hf_logging.disable_progress_bar()  # keep save/load quiet on non-tty runs


def build_model(vocab_size: int, base_model: str, seed: int) -> T5ForConditionalGeneration:
    preset = MODEL_PRESETS[base_model]
    torch.manual_seed(seed)
    cfg = T5Config(
        vocab_size=vocab_size,
        pad_token_id=PAD_ID,
        eos_token_id=EOS_ID,
        decoder_start_token_id=PAD_ID,
        **preset,
    )
    return T5ForConditionalGeneration(cfg)


def save_model(model: T5ForConditionalGeneration, ckpt_dir: str | Path) -> None:
    model.save_pretrained(str(Path(ckpt_dir) / "model"))


def load_model(ckpt_dir: str | Path) -> T5ForConditionalGeneration:
    model_dir = Path(ckpt_dir) / "model"
    if not model_dir.is_dir():
        raise ValueError(f"unloadable checkpoint {ckpt_dir}: missing {model_dir}")
    try:
        model = T5ForConditionalGeneration.from_pretrained(str(model_dir))
    except (OSError, ValueError) as exc:
        raise ValueError(f"unloadable checkpoint {ckpt_dir}: {exc}") from exc
    model.eval()
    return model
