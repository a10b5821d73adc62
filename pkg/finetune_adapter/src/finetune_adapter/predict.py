"""Checkpoint inference: beam lists for retrieval/ranking, yes-probability for rating."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import torch

from .io import read_corpus, write_predictions
from .model import load_model
from .train import pad_batch
from .vocab import PAD_ID, Tokenizer, encode, extract_ids, load_tokenizer


def load_checkpoint(ckpt_dir: str | Path) -> tuple[Any, Tokenizer, dict]:
    ckpt_dir = Path(ckpt_dir)
    model = load_model(ckpt_dir)
    try:
        tok = load_tokenizer(ckpt_dir / "tokenizer.json")
        with open(ckpt_dir / "adapter.json", encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"unloadable checkpoint {ckpt_dir}: {exc}") from exc
    return model, tok, meta


def _beam_items(
    model: Any, tok: Tokenizer, rows: list[dict], known: set[str],
    beam: int, batch_size: int, max_input: int, max_new: int,
) -> list[dict]:
    out = []
    for lo in range(0, len(rows), batch_size):
        chunk = rows[lo : lo + batch_size]
        input_ids = pad_batch([encode(tok, r["input"], max_input) for r in chunk], PAD_ID)
        with torch.no_grad():
            seqs = model.generate(
                input_ids=input_ids,
                attention_mask=(input_ids != PAD_ID).long(),
                num_beams=beam,
                num_return_sequences=beam,
                max_new_tokens=max_new,
                do_sample=False,
            )
        seqs = seqs.reshape(len(chunk), beam, -1)
        for r, beams in zip(chunk, seqs):
            lines = [tok.decode(b.tolist()) for b in beams]
            items, _ = extract_ids(lines, known)
            out.append({"sample_id": r["id"], "items": items})
    return out


def _yes_scores(
    model: Any, tok: Tokenizer, rows: list[dict], batch_size: int, max_input: int
) -> list[dict]:
    yes_id = tok.token_to_id("yes")
    no_id = tok.token_to_id("no")
    if yes_id is None or no_id is None:
        raise ValueError("tokenizer lacks yes/no tokens; rebuild the checkpoint")
    out = []
    for lo in range(0, len(rows), batch_size):
        chunk = rows[lo : lo + batch_size]
        input_ids = pad_batch([encode(tok, r["input"], max_input) for r in chunk], PAD_ID)
        start = torch.full((len(chunk), 1), PAD_ID, dtype=torch.long)
        with torch.no_grad():
            logits = model(
                input_ids=input_ids,
                attention_mask=(input_ids != PAD_ID).long(),
                decoder_input_ids=start,
            ).logits[:, 0, :]
        # softmax restricted to {yes, no} collapses to a sigmoid of the gap
        score = torch.sigmoid(logits[:, yes_id] - logits[:, no_id])
        for r, s in zip(chunk, score):
            out.append({"sample_id": r["id"], "score": float(s)})
    return out


def predict(
    ckpt_dir: str | Path,
    corpus_file: str | Path,
    task: str,
    out_path: str | Path,
    beam: int | None = None,
    batch_size: int = 16,
    max_new_tokens: int = 8,
) -> dict:
    """Write one prediction file for every sample of the given corpus file."""
    model, tok, meta = load_checkpoint(ckpt_dir)
    cfg = meta["config"]
    rows, malformed = read_corpus(corpus_file)
    rows = [r for r in rows if r["task"] == task]
    if not rows:
        raise ValueError(f"{corpus_file}: no samples for task {task}")
    beam = cfg["beam_width"] if beam is None else beam
    if task in ("retrieval", "ranking"):
        known = set(meta["display_ids"])
        records = _beam_items(
            model, tok, rows, known, beam, batch_size, cfg["max_input_tokens"], max_new_tokens
        )
    elif task == "rating":
        records = _yes_scores(model, tok, rows, batch_size, cfg["max_input_tokens"])
    else:
        raise ValueError(f"unknown prediction task: {task}")
    n = write_predictions(
        out_path, cfg["seed"], {"task": task, "beam": beam, "ckpt": str(ckpt_dir)}, records
    )
    return {"records": n, "malformed": malformed, "beam": beam, "task": task}
