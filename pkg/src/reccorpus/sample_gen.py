"""Data-sample generation: windows, negative sampling, and corpus emission."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from . import templates
from .ingest import ItemMetadata
from .io import make_header, write_jsonl
from .rng import sample_rng
from .splits import DatasetSplit, IdMap, UserSplit

REC_TASKS = ("retrieval", "ranking", "rating")
AUX_TASKS = ("mim", "mlm", "bpr")
ALL_TASKS = (*REC_TASKS, *AUX_TASKS, "ie")

Triple = tuple[int, float, int]  # (item_idx, rating, timestamp)


@dataclass
class GenConfig:
    window_size: int = 20
    mask_ratio: float = 0.20
    pool_size: int = 100
    seed: int = 42
    epochs: int = 1
    tasks: tuple[str, ...] = (*REC_TASKS, *AUX_TASKS)

    def __post_init__(self) -> None:
        if self.window_size < 2:
            raise ValueError("window_size must be >= 2")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ValueError("mask_ratio must be in (0, 1)")
        if self.pool_size < 2:
            raise ValueError("pool_size must be >= 2")
        unknown = set(self.tasks) - set(ALL_TASKS)
        if unknown:
            raise ValueError(f"unknown tasks: {sorted(unknown)}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "window_size": self.window_size,
            "mask_ratio": self.mask_ratio,
            "pool_size": self.pool_size,
            "seed": self.seed,
            "epochs": self.epochs,
            "tasks": list(self.tasks),
        }


@dataclass
class WindowSpec:
    user_idx: int
    start: int  # 1-based position of the window within the user's train list
    items: list[Triple]


@dataclass
class DataSample:
    sample_id: str
    task: str
    input: str
    output: str
    meta: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.sample_id,
            "task": self.task,
            "input": self.input,
            "output": self.output,
            "meta": self.meta,
        }


class PopularityTable:
    """Train-interaction counts per item with a cumulative table for sampling."""

    def __init__(self, counts: np.ndarray):
        self.counts = counts.astype(np.int64)
        self.cum = np.cumsum(self.counts)
        self.total = int(self.cum[-1]) if len(self.cum) else 0

    @classmethod
    def from_split(cls, split: DatasetSplit, n_items: int) -> "PopularityTable":
        counts = np.zeros(n_items, dtype=np.int64)
        for user in split.users:
            for item_idx, _, _ in user.train:
                counts[item_idx] += 1
        return cls(counts)

    def top_k(self, k: int) -> list[int]:
        """Most-interacted items, ties broken by item index."""
        order = np.lexsort((np.arange(len(self.counts)), -self.counts))
        return [int(i) for i in order[:k]]


def enumerate_windows(user: UserSplit, user_idx: int, w: int, mode: str) -> list[WindowSpec]:
    """Sliding windows per the split mode.

    TRAIN: every length-w subsequence of the train list (one short window when
    the list is shorter than w). VALID/TEST: the single window ending at the
    held-out item, left-truncated to w.
    """
    if mode == "train":
        train = user.train
        n_win = max(1, len(train) - w + 1)
        return [WindowSpec(user_idx, k, list(train[k - 1 : k - 1 + w])) for k in range(1, n_win + 1)]
    if mode == "valid":
        items = [*user.train, user.valid][-w:]
        return [WindowSpec(user_idx, 0, items)]
    if mode == "test":
        items = [*user.train, user.valid, user.test][-w:]
        return [WindowSpec(user_idx, 0, items)]
    raise ValueError(f"unknown window mode: {mode}")


def count_train_windows(split: DatasetSplit, w: int) -> int:
    return sum(max(1, len(u.train) - w + 1) for u in split.users)


def sample_negatives_by_popularity(
    user_items: set[int],
    pop: PopularityTable,
    n: int,
    rng: np.random.Generator,
) -> list[int]:
    """n distinct negatives, weight proportional to train count, user's items excluded."""
    if pop.total <= 0:
        raise ValueError("popularity table is empty")
    n_eligible = int(np.count_nonzero(pop.counts)) - sum(
        1 for i in user_items if pop.counts[i] > 0
    )
    if n_eligible < n:
        raise ValueError(
            f"only {n_eligible} items with positive weight outside the user sequence; need {n}"
        )
    chosen: list[int] = []
    chosen_set: set[int] = set()
    rounds = 0
    while len(chosen) < n:
        rounds += 1
        if rounds > 64:
            # pathological weight concentration: fall back to exact renormalized draws
            weights = pop.counts.astype(np.float64)
            weights[list(user_items)] = 0.0
            if chosen_set:
                weights[list(chosen_set)] = 0.0
            for _ in range(n - len(chosen)):
                cum = np.cumsum(weights)
                r = rng.random() * cum[-1]
                j = int(np.searchsorted(cum, r, side="right"))
                chosen.append(j)
                weights[j] = 0.0
            break
        size = max(32, 2 * (n - len(chosen)))
        draws = rng.integers(1, pop.total + 1, size=size)
        for j in np.searchsorted(pop.cum, draws, side="left"):
            j = int(j)
            if j in user_items or j in chosen_set:
                continue
            chosen.append(j)
            chosen_set.add(j)
            if len(chosen) == n:
                break
    return chosen


def make_ranking_pool(
    user_items: set[int],
    target_idx: int,
    pop: PopularityTable,
    pool_size: int,
    rng: np.random.Generator,
) -> list[int]:
    """The c-item candidate pool: c-1 negatives plus the target at a random slot."""
    negatives = sample_negatives_by_popularity(user_items, pop, pool_size - 1, rng)
    pos = int(rng.integers(0, pool_size))
    return [*negatives[:pos], target_idx, *negatives[pos:]]


def mim_mask_count(length: int, ratio: float) -> int:
    """round-half-up(ratio * length), clamped to [1, length - 1]."""
    return min(max(int(math.floor(ratio * length + 0.5)), 1), length - 1)


def _items(table: Sequence[templates.Item], triples: Sequence[Triple]) -> list[templates.Item]:
    return [table[i] for i, _, _ in triples]


def _sid(task: str, split: str, user: int, window: int, epoch: int | None = None) -> str:
    sid = f"{task}:{split}:u{user}:w{window}"
    if epoch is not None:
        sid += f":e{epoch}"
    return sid


def gen_retrieval(window: WindowSpec, split_name: str, table: Sequence[templates.Item]) -> DataSample:
    history, target = window.items[:-1], window.items[-1]
    target_id = table[target[0]][0]
    return DataSample(
        sample_id=_sid("retrieval", split_name, window.user_idx, window.start),
        task="retrieval",
        input=templates.render_retrieval_input(_items(table, history)),
        output=target_id,
        meta={"user": window.user_idx, "window": window.start, "epoch": 0,
              "target": target_id, "candidates": None},
    )


def gen_ranking(
    window: WindowSpec,
    split_name: str,
    table: Sequence[templates.Item],
    candidates: Sequence[int],
) -> DataSample:
    history, target = window.items[:-1], window.items[-1]
    candidate_ids = [table[i][0] for i in candidates]
    if len(set(candidate_ids)) != len(candidate_ids):
        raise ValueError("duplicate candidate in ranking pool (generator bug)")
    target_id = table[target[0]][0]
    if target_id not in candidate_ids:
        raise ValueError("ranking target missing from its own pool (generator bug)")
    return DataSample(
        sample_id=_sid("ranking", split_name, window.user_idx, window.start),
        task="ranking",
        input=templates.render_ranking_input(_items(table, history), candidate_ids),
        output=target_id,
        meta={"user": window.user_idx, "window": window.start, "epoch": 0,
              "target": target_id, "candidates": candidate_ids},
    )


def gen_rating(window: WindowSpec, split_name: str, table: Sequence[templates.Item]) -> DataSample:
    history, target = window.items[:-1], window.items[-1]
    likes = _items(table, [t for t in history if t[1] > 3])
    dislikes = _items(table, [t for t in history if t[1] <= 3])
    target_id = table[target[0]][0]
    return DataSample(
        sample_id=_sid("rating", split_name, window.user_idx, window.start),
        task="rating",
        input=templates.render_rating_input(likes, dislikes, table[target[0]]),
        output="yes" if target[1] > 3 else "no",
        meta={"user": window.user_idx, "window": window.start, "epoch": 0,
              "target": target_id, "candidates": None},
    )


def gen_mim(
    window: WindowSpec,
    table: Sequence[templates.Item],
    mask_ratio: float,
    epoch: int,
    rng: np.random.Generator,
) -> DataSample:
    length = len(window.items)
    m = mim_mask_count(length, mask_ratio)
    positions = sorted(int(p) for p in rng.choice(length, size=m, replace=False))
    items = _items(table, window.items)
    masked = [items[p] for p in positions]
    return DataSample(
        sample_id=_sid("mim", "train", window.user_idx, window.start, epoch),
        task="mim",
        input=templates.render_mim_input(items, set(positions)),
        output=templates.render_mim_output(masked),
        meta={"user": window.user_idx, "window": window.start, "epoch": epoch,
              "target": None, "candidates": None},
    )


def gen_mlm(
    user_train: Sequence[Triple],
    user_idx: int,
    window_idx: int,
    w: int,
    epoch: int,
    table: Sequence[templates.Item],
    rng: np.random.Generator,
) -> DataSample:
    length = len(user_train)
    start = int(rng.integers(0, length - 1))  # at least 2 items must remain
    hi = min(w, length - start)
    sub_len = int(rng.integers(2, hi + 1))
    sub = user_train[start : start + sub_len]
    return DataSample(
        sample_id=_sid("mlm", "train", user_idx, window_idx, epoch),
        task="mlm",
        input=templates.render_mlm_input(_items(table, sub)),
        output="",
        meta={"user": user_idx, "window": window_idx, "epoch": epoch,
              "target": None, "candidates": None},
    )


def gen_bpr(
    window: WindowSpec,
    table: Sequence[templates.Item],
    user_items: set[int],
    negative_idx: int,
    pos_first: bool,
    epoch: int,
) -> DataSample:
    if negative_idx in user_items:
        raise ValueError("BPR negative appears in the user sequence (generator bug)")
    history, target = window.items[:-1], window.items[-1]
    pos_item = table[target[0]]
    neg_item = table[negative_idx]
    choices = [pos_item, neg_item] if pos_first else [neg_item, pos_item]
    return DataSample(
        sample_id=_sid("bpr", "train", window.user_idx, window.start, epoch),
        task="bpr",
        input=templates.render_bpr_input(_items(table, history), choices),
        output=templates.render_bpr_output(pos_item),
        meta={"user": window.user_idx, "window": window.start, "epoch": epoch,
              "target": pos_item[0], "candidates": [choices[0][0], choices[1][0]]},
    )


IE_FIELD_ORDER = ("title", "categories", "brand", "price", "description")


def gen_ie(meta: ItemMetadata, item_idx: int, display_id: str) -> list[DataSample]:
    values: dict[str, Any] = {
        "title": meta.title if meta.title and not meta.title_missing else None,
        "categories": meta.categories or None,
        "brand": meta.brand,
        "price": meta.price,
        "description": meta.description,
    }
    out = []
    for fname in IE_FIELD_ORDER:
        value = values[fname]
        if value is None:
            continue
        question, answer = templates.render_ie(display_id, fname, value)
        out.append(DataSample(
            sample_id=f"ie:train:i{item_idx}:{fname}",
            task="ie",
            input=question,
            output=answer,
            meta={"user": None, "window": None, "epoch": 0,
                  "target": display_id, "candidates": None},
        ))
    return out


def build_item_table(
    id_map: IdMap,
    item_raw_ids: list[str],
    catalog: dict[str, ItemMetadata],
) -> tuple[list[templates.Item], int]:
    """(display_id, title) per item_idx; returns the missing-title count too."""
    table: list[templates.Item] = []
    missing = 0
    for j, raw in enumerate(item_raw_ids):
        meta = catalog.get(raw)
        title = meta.title if meta is not None else ""
        if not title:
            missing += 1
        table.append((id_map.forward[j], title))
    return table, missing


class CorpusWriter:
    """Owns file naming and summary bookkeeping for one generation run."""

    def __init__(self, out_dir: str | Path, dataset: str, cfg: GenConfig):
        self.out_dir = Path(out_dir)
        self.dataset = dataset
        self.cfg = cfg
        self.header = make_header(cfg.seed, cfg.to_dict())
        self.counts: dict[str, int] = {}
        self.files: list[str] = []

    def path(self, task: str, split: str, epoch: int | None = None, truth: bool = False) -> Path:
        name = f"{self.dataset}.{task}.{split}"
        if epoch is not None:
            name += f".epoch{epoch}"
        name += ".truth.jsonl" if truth else ".jsonl"
        return self.out_dir / name

    def write(self, task: str, split: str, samples: Iterator[DataSample], epoch: int | None = None) -> None:
        path = self.path(task, split, epoch)
        n = write_jsonl(path, self.header, (s.to_json() for s in samples))
        self.counts[path.name] = n
        self.files.append(path.name)

    def write_truth(self, task: str, split: str, rows: Iterator[dict[str, Any]]) -> None:
        path = self.path(task, split, truth=True)
        write_jsonl(path, self.header, rows)
        self.files.append(path.name)


def generate_corpus(
    split: DatasetSplit,
    id_map: IdMap,
    item_raw_ids: list[str],
    catalog: dict[str, ItemMetadata],
    cfg: GenConfig,
    out_dir: str | Path,
    dataset: str,
) -> dict[str, Any]:
    """Materialize every enabled task into JSONL corpus files.

    Train windows yield one sample per enabled recommendation task plus, per
    epoch, one MIM, one MLM, and one BPR sample. Valid/test windows yield
    recommendation-task samples only (valid restricted to the validation users).
    """
    table, missing_titles = build_item_table(id_map, item_raw_ids, catalog)
    pop = PopularityTable.from_split(split, len(item_raw_ids))
    writer = CorpusWriter(out_dir, dataset, cfg)
    seed = cfg.seed

    if not cfg.tasks:
        return {"files": [], "counts": {}, "warnings": ["task set is empty; nothing generated"]}

    user_full: list[set[int]] = [u.full_item_set() for u in split.users]

    def rec_windows(mode: str) -> Iterator[WindowSpec]:
        for u, user in enumerate(split.users):
            if mode == "valid" and u not in split.valid_user_set:
                continue
            yield from enumerate_windows(user, u, cfg.window_size, mode)

    for task in (t for t in REC_TASKS if t in cfg.tasks):
        for mode in ("train", "valid", "test"):
            def samples() -> Iterator[DataSample]:
                for win in rec_windows(mode):
                    if task == "retrieval":
                        yield gen_retrieval(win, mode, table)
                    elif task == "ranking":
                        rng = sample_rng(seed, "ranking", mode, win.user_idx, win.start, 0)
                        pool = make_ranking_pool(
                            user_full[win.user_idx], win.items[-1][0], pop, cfg.pool_size, rng
                        )
                        yield gen_ranking(win, mode, table, pool)
                    else:
                        yield gen_rating(win, mode, table)

            writer.write(task, mode, samples())

            def truth_rows() -> Iterator[dict[str, Any]]:
                for win in rec_windows(mode):
                    sid = _sid(task, mode, win.user_idx, win.start)
                    target = win.items[-1]
                    if task == "rating":
                        yield {"sample_id": sid, "label": int(target[1] > 3)}
                    else:
                        yield {"sample_id": sid, "target": table[target[0]][0]}

            writer.write_truth(task, mode, truth_rows())

    for task in (t for t in AUX_TASKS if t in cfg.tasks):
        for epoch in range(cfg.epochs):
            def samples() -> Iterator[DataSample]:
                for win in rec_windows("train"):
                    u = win.user_idx
                    rng = sample_rng(seed, task, "train", u, win.start, epoch)
                    if task == "mim":
                        yield gen_mim(win, table, cfg.mask_ratio, epoch, rng)
                    elif task == "mlm":
                        yield gen_mlm(split.users[u].train, u, win.start, cfg.window_size, epoch, table, rng)
                    else:
                        neg = sample_negatives_by_popularity(user_full[u], pop, 1, rng)[0]
                        pos_first = bool(rng.integers(0, 2))
                        yield gen_bpr(win, table, user_full[u], neg, pos_first, epoch)

            writer.write(task, "train", samples(), epoch=epoch)

    if "ie" in cfg.tasks:
        def ie_samples() -> Iterator[DataSample]:
            for j, raw in enumerate(item_raw_ids):
                meta = catalog.get(raw)
                if meta is None:
                    continue
                yield from gen_ie(meta, j, id_map.forward[j])

        writer.write("ie", "train", ie_samples())

    warnings = []
    if missing_titles:
        warnings.append(f"{missing_titles} items have no title; rendered empty")
    return {"files": writer.files, "counts": writer.counts, "warnings": warnings}
