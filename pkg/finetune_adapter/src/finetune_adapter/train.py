"""Fine-tuning loop: mixture batches into the T5 backbone, checkpoint out."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

import numpy as np
import torch

from .config import AdapterConfig
from .io import make_header, read_id_map
from .mixture import MixtureStream, load_mixture
from .model import build_model, save_model
from .vocab import PAD_ID, Tokenizer, build_tokenizer, encode, save_tokenizer


def pad_batch(seqs: list[list[int]], pad_value: int) -> torch.Tensor:
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), pad_value, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.tensor(s, dtype=torch.long)
    return out


def batches(
    stream: MixtureStream, tok: Tokenizer, cfg: AdapterConfig
) -> Iterator[tuple[torch.Tensor, torch.Tensor, torch.Tensor]]:
    """(input_ids, attention_mask, labels) batches; label padding is -100."""
    pairs = stream.pairs()
    while True:
        inputs, targets = [], []
        for _ in range(cfg.batch_size):
            src, tgt = next(pairs)
            inputs.append(encode(tok, src, cfg.max_input_tokens))
            targets.append(encode(tok, tgt, cfg.max_target_tokens))
        input_ids = pad_batch(inputs, PAD_ID)
        labels = pad_batch(targets, -100)
        yield input_ids, (input_ids != PAD_ID).long(), labels


def train(cfg: AdapterConfig, out_dir: str | Path, log_every: int = 100) -> dict:
    """Run cfg.steps optimizer steps and save a self-contained checkpoint."""
    display_ids = read_id_map(cfg.idmap_path)
    stream = load_mixture(
        list(cfg.corpus_files), cfg.weights, cfg.seed, cfg.span_ratio, cfg.mean_span
    )
    texts = [row[key] for f in stream.files for row in f.rows for key in ("input", "output")]
    tok = build_tokenizer(texts, display_ids)
    model = build_model(tok.get_vocab_size(), cfg.base_model, cfg.seed)
    model.train()
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr)
    sched = torch.optim.lr_scheduler.LambdaLR(
        opt, lambda step: min(1.0, (step + 1) / max(1, cfg.warmup_steps))
    )

    losses: list[float] = []
    for step, (input_ids, mask, labels) in enumerate(batches(stream, tok, cfg)):
        if step >= cfg.steps:
            break
        loss = model(input_ids=input_ids, attention_mask=mask, labels=labels).loss
        opt.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
        opt.step()
        sched.step()
        losses.append(float(loss.detach()))
        if log_every and (step + 1) % log_every == 0:
            recent = float(np.mean(losses[-log_every:]))
            print(f"step {step + 1}/{cfg.steps}  loss {recent:.4f}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(model, out_dir)
    save_tokenizer(tok, out_dir / "tokenizer.json")
    meta = {
        "header": make_header(cfg.seed, cfg.to_dict()),
        "config": cfg.to_dict(),
        "display_ids": display_ids,
        "n_malformed": stream.n_malformed,
        "final_loss": losses[-1] if losses else None,
    }
    with open(out_dir / "adapter.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, ensure_ascii=False, indent=1)
    return meta
