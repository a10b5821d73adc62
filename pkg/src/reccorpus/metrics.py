"""Prediction parsing and ranking/rating metrics (HR@k, NDCG@k, AUC-ROC)."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .io import iter_jsonl
from .splits import IdMap

_ID_TOKEN = re.compile(r"I\d+")


def parse_model_output(lines: Iterable[str], id_map: IdMap) -> tuple[list[str], int]:
    """Normalize free-text model lines into a ranked display-ID list.

    Per line, the first I<digits> token present in the id map wins; lines with
    no usable token are dropped and counted. Duplicates keep first occurrence.

    Returns:
        (ranked display IDs, number of dropped lines).
    """
    out: list[str] = []
    seen: set[str] = set()
    dropped = 0
    for line in lines:
        found = None
        for token in _ID_TOKEN.findall(line):
            if token in id_map.inverse:
                found = token
                break
        if found is None:
            dropped += 1
        elif found not in seen:
            seen.add(found)
            out.append(found)
    return out, dropped


def hit_ratio_at_k(records: dict[str, Sequence[str]], truths: dict[str, str], k: int) -> float:
    """Fraction of truth samples whose target sits in the first k predictions."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not truths:
        return 0.0
    hits = 0
    for sid, target in truths.items():
        ranked = records.get(sid)
        if ranked and target in ranked[:k]:
            hits += 1
    return hits / len(truths)


def ndcg_at_k(records: dict[str, Sequence[str]], truths: dict[str, str], k: int) -> float:
    """Single-relevant-item NDCG: 1/log2(rank+1) when rank <= k, else 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not truths:
        return 0.0
    total = 0.0
    for sid, target in truths.items():
        ranked = records.get(sid)
        if not ranked:
            continue
        try:
            rank = ranked[:k].index(target) + 1
        except ValueError:
            continue
        total += 1.0 / math.log2(rank + 1)
    return total / len(truths)


def auc_roc(pairs: Sequence[tuple[float, int]]) -> float:
    """Mann-Whitney AUC with average ranks for ties.

    Equals P(score+ > score-) + 0.5 * P(tie) over positive/negative pairs.
    Raises on single-class input.
    """
    scores = np.asarray([s for s, _ in pairs], dtype=np.float64)
    labels = np.asarray([l for _, l in pairs], dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: need at least one positive and one negative label")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # 1-based average rank across the tie group
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    r_pos = float(ranks[labels == 1].sum())
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class MetricsReport:
    task: str
    values: dict[str, float | None]
    n_evaluated: int
    n_unparseable: int
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "metrics": self.values,
            "n_evaluated": self.n_evaluated,
            "n_unparseable": self.n_unparseable,
            "notes": self.notes,
        }

    def to_text(self) -> str:
        lines = [f"task: {self.task}   evaluated: {self.n_evaluated}   unparseable: {self.n_unparseable}"]
        width = max(len(name) for name in self.values) if self.values else 0
        for name, value in self.values.items():
            shown = "undefined" if value is None else f"{value:.4f}"
            lines.append(f"  {name:<{width}}  {shown}")
        return "\n".join(lines)


def _load_predictions_ranked(path: str | Path, id_map: IdMap) -> tuple[dict[str, list[str]], int]:
    records: dict[str, list[str]] = {}
    unparseable = 0
    for row in iter_jsonl(path):
        sid = row["sample_id"]
        if sid in records:
            raise ValueError(f"duplicate sample_id in prediction file: {sid}")
        ranked, dropped = parse_model_output([str(x) for x in row["items"]], id_map)
        unparseable += dropped
        records[sid] = ranked
    return records, unparseable


def _load_predictions_scored(path: str | Path) -> dict[str, float]:
    records: dict[str, float] = {}
    for row in iter_jsonl(path):
        sid = row["sample_id"]
        if sid in records:
            raise ValueError(f"duplicate sample_id in prediction file: {sid}")
        score = float(row["score"])
        if not math.isfinite(score):
            raise ValueError(f"non-finite score for {sid}")
        records[sid] = score
    return records


def evaluate_run(
    pred_path: str | Path,
    truth_path: str | Path,
    task: str,
    id_map: IdMap | None = None,
) -> MetricsReport:
    """Score one prediction file against its truth file.

    Retrieval/ranking report HR@{1,5,10} and NDCG@{5,10}; rating reports
    AUC-ROC. Truth samples without a prediction score 0 (kept in the mean).
    """
    notes: list[str] = []
    if task in ("retrieval", "ranking"):
        if id_map is None:
            raise ValueError("retrieval/ranking evaluation requires the id map")
        truths: dict[str, str] = {}
        for row in iter_jsonl(truth_path):
            if "target" not in row:
                raise ValueError(f"truth file {truth_path} does not match task {task}")
            truths[row["sample_id"]] = row["target"]
        records, unparseable = _load_predictions_ranked(pred_path, id_map)
        values = {
            "HR@1": hit_ratio_at_k(records, truths, 1),
            "HR@5": hit_ratio_at_k(records, truths, 5),
            "HR@10": hit_ratio_at_k(records, truths, 10),
            "NDCG@5": ndcg_at_k(records, truths, 5),
            "NDCG@10": ndcg_at_k(records, truths, 10),
        }
        if not truths:
            notes.append("empty truth file")
        missing = sum(1 for sid in truths if sid not in records)
        if missing:
            notes.append(f"{missing} truth samples had no prediction; scored 0")
        return MetricsReport(task, values, len(truths) - missing, unparseable, notes)

    if task == "rating":
        labels: dict[str, int] = {}
        for row in iter_jsonl(truth_path):
            if "label" not in row:
                raise ValueError(f"truth file {truth_path} does not match task rating")
            labels[row["sample_id"]] = int(row["label"])
        scores = _load_predictions_scored(pred_path)
        missing = sum(1 for sid in labels if sid not in scores)
        if missing:
            notes.append(f"{missing} truth samples had no prediction; scored 0")
        pairs = [(scores.get(sid, 0.0), label) for sid, label in labels.items()]
        try:
            auc: float | None = auc_roc(pairs) if pairs else None
        except ValueError as exc:
            auc = None
            notes.append(str(exc))
        if not labels:
            notes.append("empty truth file")
        return MetricsReport("rating", {"AUC-ROC": auc}, len(labels) - missing, 0, notes)

    raise ValueError(f"unknown task for evaluation: {task}")
