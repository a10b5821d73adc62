"""Corpus-local word-level tokenizer; display IDs stay atomic tokens."""

from __future__ import annotations

import re
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace

from .config import N_SENTINELS

PAD, EOS, UNK = "<pad>", "</s>", "<unk>"
PAD_ID, EOS_ID, UNK_ID = 0, 1, 2

_ID_TOKEN = re.compile(r"I\d+")
_SPLITTER = Whitespace()  # \w+ runs or punctuation runs, so I123 stays whole


def sentinel(k: int) -> str:
    return f"<extra_id_{k}>"


def words(text: str) -> list[str]:
    return [w for w, _ in _SPLITTER.pre_tokenize_str(text)]


def build_tokenizer(texts: Iterable[str], display_ids: Sequence[str]) -> Tokenizer:
    """Word-level vocab over the corpus plus every id-map display ID.

    "yes"/"no" are always present for the rating head; sentinels occupy a
    fixed block right after the pad/eos/unk slots.
    """
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(words(text))
    vocab: dict[str, int] = {PAD: PAD_ID, EOS: EOS_ID, UNK: UNK_ID}
    for k in range(N_SENTINELS):
        vocab[sentinel(k)] = len(vocab)
    for token in display_ids:
        vocab.setdefault(token, len(vocab))
    for token in ("yes", "no"):
        vocab.setdefault(token, len(vocab))
    for token, _ in counts.most_common():
        vocab.setdefault(token, len(vocab))
    tok = Tokenizer(WordLevel(vocab, unk_token=UNK))
    tok.pre_tokenizer = _SPLITTER
    return tok


def save_tokenizer(tok: Tokenizer, path: str | Path) -> None:
    tok.save(str(path))


def load_tokenizer(path: str | Path) -> Tokenizer:
    return Tokenizer.from_file(str(path))


def encode(tok: Tokenizer, text: str, max_tokens: int) -> list[int]:
    """Token ids truncated to max_tokens with a terminal EOS."""
    ids = tok.encode(text).ids[: max_tokens - 1]
    return ids + [EOS_ID]


def extract_ids(lines: Iterable[str], known: set[str]) -> tuple[list[str], int]:
    """Normalize free-text lines into a ranked display-ID list.

    Same rule as the harness evaluator: per line, the first I<digits> token
    present in the id map wins; lines with none are dropped and counted;
    duplicates keep first occurrence.
    """
    out: list[str] = []
    seen: set[str] = set()
    dropped = 0
    for line in lines:
        found = None
        for token in _ID_TOKEN.findall(line):
            if token in known:
                found = token
                break
        if found is None:
            dropped += 1
        elif found not in seen:
            seen.add(found)
            out.append(found)
    return out, dropped
