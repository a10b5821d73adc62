"""Weighted multi-task training stream with span corruption for MLM lines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

import numpy as np

from .config import N_SENTINELS
from .io import read_corpus
from .vocab import sentinel, words


def _composition(total: int, parts: int, rng: np.random.Generator) -> list[int]:
    """Random composition of total into parts pieces, each >= 1."""
    if parts == 1:
        return [total]
    cuts = np.sort(rng.choice(total - 1, size=parts - 1, replace=False)) + 1
    bounds = np.concatenate(([0], cuts, [total]))
    return np.diff(bounds).tolist()


def corrupt_spans(
    tokens: list[str], rng: np.random.Generator, ratio: float, mean_span: int
) -> tuple[list[str], list[str]]:
    """T5-style span corruption: sentinel-marked input, sentinel-delimited target.

    round(ratio * n) tokens (clamped to [1, n-1]) are dropped from the input in
    round(noise / mean_span) spans, each preceded by at least one kept token;
    the target lists the dropped spans behind their sentinels plus a terminal
    sentinel.
    """
    n = len(tokens)
    if n < 2:
        raise ValueError("sequence too short to corrupt")
    num_noise = min(max(1, round(ratio * n)), n - 1)
    # the terminal sentinel also needs a slot, hence N_SENTINELS - 1 spans max
    num_spans = min(max(1, round(num_noise / mean_span)), num_noise, n - num_noise, N_SENTINELS - 1)
    noise_lens = _composition(num_noise, num_spans, rng)
    keep_lens = _composition(n - num_noise, num_spans, rng)
    inp: list[str] = []
    tgt: list[str] = []
    pos = 0
    for k in range(num_spans):
        inp.extend(tokens[pos : pos + keep_lens[k]])
        pos += keep_lens[k]
        inp.append(sentinel(k))
        tgt.append(sentinel(k))
        tgt.extend(tokens[pos : pos + noise_lens[k]])
        pos += noise_lens[k]
    tgt.append(sentinel(num_spans))
    return inp, tgt


@dataclass
class TaskFile:
    path: str
    task: str
    rows: list[dict[str, Any]]


class MixtureStream:
    """Infinite (input, target) text pairs interleaved across task files.

    Each draw picks a file by weight, then the next row of that file's
    shuffled pass (reshuffled when exhausted). MLM rows are corrupted here;
    every other task trains on its rendered input/output as-is.
    """

    def __init__(
        self,
        files: list[TaskFile],
        weights: dict[str, float],
        seed: int,
        span_ratio: float = 0.20,
        mean_span: int = 3,
        n_malformed: int = 0,
    ) -> None:
        self.files = files
        self.n_malformed = n_malformed
        self.n_skipped_short = 0
        self.span_ratio = span_ratio
        self.mean_span = mean_span
        self.rng = np.random.default_rng(seed)
        raw = [(weights.get(f.task, 0.0) if weights else 1.0) for f in files]
        for f, w in zip(files, raw):
            if w > 0 and not f.rows:
                raise ValueError(f"{f.path}: no usable rows but mixture weight {w}")
        total = float(sum(raw))
        if total <= 0:
            raise ValueError("mixture weight sum is zero; nothing to sample")
        self.probs = np.asarray(raw, dtype=np.float64) / total
        self._order: list[np.ndarray] = [np.empty(0, dtype=np.int64) for _ in files]
        self._cursor = [0] * len(files)

    def _next_row(self, fi: int) -> dict[str, Any]:
        if self._cursor[fi] >= len(self._order[fi]):
            self._order[fi] = self.rng.permutation(len(self.files[fi].rows))
            self._cursor[fi] = 0
        row = self.files[fi].rows[int(self._order[fi][self._cursor[fi]])]
        self._cursor[fi] += 1
        return row

    def pairs(self) -> Iterator[tuple[str, str]]:
        while True:
            fi = int(self.rng.choice(len(self.files), p=self.probs))
            row = self._next_row(fi)
            if self.files[fi].task == "mlm":
                tokens = words(row["input"])
                if len(tokens) < 2:
                    self.n_skipped_short += 1
                    continue
                inp, tgt = corrupt_spans(tokens, self.rng, self.span_ratio, self.mean_span)
                yield " ".join(inp), " ".join(tgt)
            else:
                yield row["input"], row["output"]


def load_mixture(
    paths: list[str],
    weights: dict[str, float],
    seed: int,
    span_ratio: float = 0.20,
    mean_span: int = 3,
) -> MixtureStream:
    """Read corpus files and build the weighted stream.

    Empty weights mean uniform across files; otherwise a file's weight is its
    task's entry (absent task = 0, which excludes the file).
    """
    files: list[TaskFile] = []
    malformed = 0
    for path in paths:
        rows, bad = read_corpus(path)
        malformed += bad
        task = rows[0]["task"] if rows else ""
        files.append(TaskFile(path=str(path), task=task, rows=rows))
    if not files:
        raise ValueError("no corpus files given")
    return MixtureStream(files, weights, seed, span_ratio, mean_span, n_malformed=malformed)
