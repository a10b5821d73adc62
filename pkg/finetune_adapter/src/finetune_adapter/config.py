"""Adapter configuration: training mixture, model preset, decoding knobs."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

# Architecture presets for the random-init backbone; keys are the base-model
# identifiers accepted by AdapterConfig (no hub download in this environment).
MODEL_PRESETS = {
    "t5-nano": {"d_model": 128, "d_ff": 256, "num_layers": 2, "num_heads": 4, "d_kv": 32},
    "t5-micro": {"d_model": 256, "d_ff": 512, "num_layers": 3, "num_heads": 4, "d_kv": 64},
}

N_SENTINELS = 100


@dataclass(frozen=True)
class AdapterConfig:
    corpus_files: tuple[str, ...] = ()
    idmap_path: str = ""
    base_model: str = "t5-nano"
    steps: int = 2000
    batch_size: int = 16
    lr: float = 5e-4
    warmup_steps: int = 100
    beam_width: int = 20
    span_ratio: float = 0.20
    mean_span: int = 3
    max_input_tokens: int = 256
    max_target_tokens: int = 96
    weights: dict[str, float] = field(default_factory=dict)
    seed: int = 42

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError(f"beam width must be >= 1, got {self.beam_width}")
        if not 0.0 < self.span_ratio < 1.0:
            raise ValueError(f"span ratio must be in (0, 1), got {self.span_ratio}")
        if self.mean_span < 1:
            raise ValueError(f"mean span length must be >= 1, got {self.mean_span}")
        if self.base_model not in MODEL_PRESETS:
            raise ValueError(
                f"unknown base model {self.base_model!r} (have {sorted(MODEL_PRESETS)})"
            )
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch size >= 1")
        for task, w in self.weights.items():
            if w < 0:
                raise ValueError(f"mixture weight for {task} must be >= 0, got {w}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["corpus_files"] = list(d["corpus_files"])
        return d


def parse_weights(text: str) -> dict[str, float]:
    """Parse "task=w,task=w" flag syntax into a weights dict."""
    weights: dict[str, float] = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ValueError(f"bad weight {piece!r}; expected task=value")
        task, value = piece.split("=", 1)
        weights[task.strip()] = float(value)
    return weights


def load_config_file(path: str | Path) -> dict:
    """Flat JSON config; keys must be AdapterConfig fields."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    known = {f.name for f in dataclasses.fields(AdapterConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    if "weights" in data and isinstance(data["weights"], str):
        data["weights"] = parse_weights(data["weights"])
    if "corpus_files" in data:
        data["corpus_files"] = tuple(data["corpus_files"])
    return data
