"""Raw log ingestion: parsing, dedupe, k-core filtering, sequence building."""

from __future__ import annotations

import ast
import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable

from .io import make_header, read_jsonl, write_jsonl

REVIEW_FIELDS = ("reviewerID", "asin", "overall", "unixReviewTime")


@dataclass(frozen=True)
class RawInteraction:
    user_raw_id: str
    item_raw_id: str
    rating: float
    timestamp: int


@dataclass
class ItemMetadata:
    item_raw_id: str
    title: str = ""
    brand: str | None = None
    categories: list[str] = field(default_factory=list)
    price: float | None = None
    description: str | None = None
    title_missing: bool = False


@dataclass
class UserSequence:
    user_idx: int
    user_raw_id: str
    # (item_idx, rating, timestamp), chronological
    items: list[tuple[int, float, int]]


@dataclass(frozen=True)
class CorpusStats:
    n_users: int
    n_items: int
    n_interactions: int
    sparsity: float


def _coerce_interaction(rec: dict[str, Any]) -> RawInteraction | None:
    try:
        user = str(rec["reviewerID"])
        item = str(rec["asin"])
        rating = float(rec["overall"])
        ts = int(rec["unixReviewTime"])
    except (KeyError, TypeError, ValueError):
        return None
    if not user or not item or ts < 0 or not (1.0 <= rating <= 5.0):
        return None
    return RawInteraction(user, item, rating, ts)


def parse_interactions(stream: IO[bytes] | IO[str], fmt: str) -> tuple[list[RawInteraction], int]:
    """Parse a review log into interactions.

    Args:
        stream: open byte or text stream.
        fmt: "amazon-review-jsonl" or "csv" (header row with the same fields).

    Returns:
        (interactions in input order, count of malformed records skipped).
    Raises if the stream is unreadable or more than 10% of records are malformed.
    """
    if isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8")

    out: list[RawInteraction] = []
    skipped = 0
    total = 0
    if fmt == "amazon-review-jsonl":
        for line in stream:
            line = line.strip()
            if not line:
                continue
            total += 1
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                # some Amazon dumps are python-literal lines, not strict JSON
                try:
                    rec = ast.literal_eval(line)
                except (ValueError, SyntaxError):
                    skipped += 1
                    continue
            inter = _coerce_interaction(rec) if isinstance(rec, dict) else None
            if inter is None:
                skipped += 1
            else:
                out.append(inter)
    elif fmt == "csv":
        reader = csv.DictReader(stream)
        if reader.fieldnames is None or not set(REVIEW_FIELDS) <= set(reader.fieldnames):
            raise ValueError(f"csv header must declare fields {REVIEW_FIELDS}")
        for rec in reader:
            total += 1
            inter = _coerce_interaction(rec)
            if inter is None:
                skipped += 1
            else:
                out.append(inter)
    else:
        raise ValueError(f"unknown interaction format: {fmt}")

    if total > 0 and skipped / total > 0.10:
        raise ValueError(f"{skipped}/{total} records malformed (>10%); refusing to continue")
    return out, skipped


def parse_metadata(stream: IO[bytes] | IO[str]) -> dict[str, ItemMetadata]:
    """Parse a catalog file (JSONL or python-literal lines) keyed by raw item ID."""
    if isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8")
    catalog: dict[str, ItemMetadata] = {}
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            try:
                rec = ast.literal_eval(line)
            except (ValueError, SyntaxError):
                continue
        if not isinstance(rec, dict) or "asin" not in rec:
            continue
        raw_id = str(rec["asin"])
        title = rec.get("title")
        cats = rec.get("categories") or []
        # flatten the nested category paths some dumps use
        if cats and isinstance(cats[0], list):
            flat: list[str] = []
            for path in cats:
                for c in path:
                    if c not in flat:
                        flat.append(str(c))
            cats = flat
        price = rec.get("price")
        catalog[raw_id] = ItemMetadata(
            item_raw_id=raw_id,
            title=str(title) if title else "",
            brand=str(rec["brand"]) if rec.get("brand") else None,
            categories=[str(c) for c in cats],
            price=float(price) if price is not None else None,
            description=str(rec["description"]) if rec.get("description") else None,
            title_missing=not title,
        )
    return catalog


def dedupe(interactions: Iterable[RawInteraction]) -> list[RawInteraction]:
    """Keep one interaction per (user, item): earliest timestamp, ties by input order."""
    best: dict[tuple[str, str], RawInteraction] = {}
    order: list[tuple[str, str]] = []
    for inter in interactions:
        key = (inter.user_raw_id, inter.item_raw_id)
        cur = best.get(key)
        if cur is None:
            best[key] = inter
            order.append(key)
        elif inter.timestamp < cur.timestamp:
            best[key] = inter
    return [best[k] for k in order]


def k_core_filter(interactions: list[RawInteraction], k: int) -> list[RawInteraction]:
    """Iteratively prune users/items with fewer than k interactions, to fixpoint."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kept = interactions
    while True:
        user_deg = Counter(i.user_raw_id for i in kept)
        item_deg = Counter(i.item_raw_id for i in kept)
        nxt = [
            i for i in kept
            if user_deg[i.user_raw_id] >= k and item_deg[i.item_raw_id] >= k
        ]
        if len(nxt) == len(kept):
            break
        kept = nxt
    if not kept:
        raise ValueError("dataset too sparse for k-core")
    return kept


def build_sequences(
    interactions: list[RawInteraction],
) -> tuple[list[UserSequence], list[str]]:
    """Assign dense indices (first-appearance order) and sort each user chronologically.

    Equal timestamps are broken by raw item ID so window enumeration is reproducible.
    Returns (sequences, item_raw_ids in index order).
    """
    user_ids: dict[str, int] = {}
    item_ids: dict[str, int] = {}
    per_user: dict[int, list[tuple[int, str, float, int]]] = defaultdict(list)
    for inter in interactions:
        if inter.user_raw_id not in user_ids:
            user_ids[inter.user_raw_id] = len(user_ids)
        if inter.item_raw_id not in item_ids:
            item_ids[inter.item_raw_id] = len(item_ids)
        u = user_ids[inter.user_raw_id]
        per_user[u].append((item_ids[inter.item_raw_id], inter.item_raw_id, inter.rating, inter.timestamp))

    sequences: list[UserSequence] = []
    raw_by_user = {v: k for k, v in user_ids.items()}
    for u in range(len(user_ids)):
        entries = sorted(per_user[u], key=lambda e: (e[3], e[1]))
        sequences.append(UserSequence(u, raw_by_user[u], [(i, r, t) for i, _, r, t in entries]))
    item_raw_ids = [raw for raw, _ in sorted(item_ids.items(), key=lambda kv: kv[1])]
    return sequences, item_raw_ids


def compute_stats(sequences: list[UserSequence], n_items: int | None = None) -> CorpusStats:
    if not sequences:
        raise ValueError("no sequences")
    n_users = len(sequences)
    n_interactions = sum(len(s.items) for s in sequences)
    if n_items is None:
        n_items = len({i for s in sequences for i, _, _ in s.items})
    sparsity = 100.0 * (1.0 - n_interactions / (n_users * n_items))
    return CorpusStats(n_users, n_items, n_interactions, sparsity)


def save_snapshot(
    path: str | Path,
    sequences: list[UserSequence],
    item_raw_ids: list[str],
    catalog: dict[str, ItemMetadata],
    seed: int,
    config: dict[str, Any],
) -> None:
    payload = {
        "item_raw_ids": item_raw_ids,
        "users": [
            {"user_raw_id": s.user_raw_id, "items": [[i, r, t] for i, r, t in s.items]}
            for s in sequences
        ],
        "catalog": {
            raw: {
                "title": m.title,
                "brand": m.brand,
                "categories": m.categories,
                "price": m.price,
                "description": m.description,
                "title_missing": m.title_missing,
            }
            for raw, m in catalog.items()
        },
    }
    write_jsonl(path, make_header(seed, config), [payload])


def load_snapshot(
    path: str | Path,
) -> tuple[list[UserSequence], list[str], dict[str, ItemMetadata], dict[str, Any]]:
    header, rows = read_jsonl(path)
    if header is None or len(rows) != 1:
        raise ValueError(f"{path}: not a snapshot file")
    payload = rows[0]
    sequences = [
        UserSequence(u, rec["user_raw_id"], [(int(i), float(r), int(t)) for i, r, t in rec["items"]])
        for u, rec in enumerate(payload["users"])
    ]
    catalog = {
        raw: ItemMetadata(
            item_raw_id=raw,
            title=m["title"],
            brand=m["brand"],
            categories=m["categories"],
            price=m["price"],
            description=m["description"],
            title_missing=m["title_missing"],
        )
        for raw, m in payload["catalog"].items()
    }
    return sequences, payload["item_raw_ids"], catalog, header
