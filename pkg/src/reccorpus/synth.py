"""Synthetic raw-log fixtures with planted, recoverable structure.

Each generator writes review/metadata files in the same shape as real logs so
the full pipeline (ingest through eval) runs on them without special casing:

- chain: every user walks the same hidden successor cycle, so a first-order
  Markov model recovers the next item exactly.
- clusters: two taste clusters with per-user preference neighborhoods, giving
  matrix factorization a large margin over global popularity.
- mixed: Zipf-popularity catalog with a long sequence-length tail, exercising
  the multi-window path.
- tiny: a 500-user chain corpus with a small vocabulary, sized for quick
  fine-tuning experiments.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .rng import STAGE_SYNTH, derive_rng

_WORDS = [
    "Amber", "Birch", "Cedar", "Delta", "Ember", "Fable", "Grove", "Harbor",
    "Iris", "Juniper", "Koral", "Lumen", "Maple", "Nectar", "Opal", "Pine",
    "Quartz", "Raven", "Sable", "Tidal", "Umber", "Velvet", "Willow", "Xenon",
    "Yarrow", "Zephyr", "Atlas", "Breeze", "Cinder", "Dusk", "Echo", "Flint",
    "Glint", "Haze", "Ivory", "Jade", "Kite", "Loom", "Mist", "North",
]

FIXTURE_TAGS = {"chain": 1, "clusters": 2, "mixed": 3, "tiny": 4}


def _title(item_n: int) -> str:
    a = _WORDS[item_n % len(_WORDS)]
    b = _WORDS[(item_n // len(_WORDS) + item_n + 7) % len(_WORDS)]
    return f"{a} {b} {item_n}"


def _write_raw(
    out_dir: Path,
    name: str,
    reviews: list[dict[str, Any]],
    item_ns: list[int],
    brands: bool = False,
) -> dict[str, str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    reviews_path = out_dir / f"{name}.reviews.jsonl"
    meta_path = out_dir / f"{name}.meta.jsonl"
    with open(reviews_path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in reviews:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
        for n in item_ns:
            meta = {"asin": f"B{n:05d}", "title": _title(n)}
            if brands:
                meta["brand"] = _WORDS[n % 11]
                meta["categories"] = [[_WORDS[n % 5], _WORDS[(n + 3) % 9]]]
                meta["price"] = round(2.0 + (n % 40) * 0.75, 2)
            fh.write(json.dumps(meta, ensure_ascii=False) + "\n")
    return {"reviews": str(reviews_path), "meta": str(meta_path)}


def _chain_reviews(
    n_users: int, n_items: int, walk_len: int, rng: np.random.Generator
) -> list[dict[str, Any]]:
    cycle = rng.permutation(n_items)
    reviews = []
    for u in range(n_users):
        start = u % n_items
        for step in range(walk_len):
            item = int(cycle[(start + step) % n_items])
            reviews.append({
                "reviewerID": f"U{u}",
                "asin": f"B{item:05d}",
                "overall": float(rng.integers(1, 6)),
                "unixReviewTime": 1_300_000_000 + u * 10_000 + step * 100,
            })
    return reviews


def gen_chain(out_dir: str | Path, seed: int, n_users: int = 200, n_items: int = 100,
              walk_len: int = 10) -> dict[str, str]:
    """Deterministic successor chain; start offsets cover every cycle position."""
    rng = derive_rng(seed, STAGE_SYNTH, FIXTURE_TAGS["chain"])
    reviews = _chain_reviews(n_users, n_items, walk_len, rng)
    return _write_raw(Path(out_dir), "chain", reviews, list(range(n_items)))


def gen_clusters(out_dir: str | Path, seed: int, n_users: int = 400, n_items: int = 200,
                 seq_len: int = 8, neighborhood: int = 20) -> dict[str, str]:
    """Two taste clusters; each user buys inside a contiguous item neighborhood."""
    rng = derive_rng(seed, STAGE_SYNTH, FIXTURE_TAGS["clusters"])
    half = n_items // 2
    reviews = []
    for u in range(n_users):
        cluster = u % 2
        base = cluster * half
        window_start = (u * 7) % half
        offsets = rng.choice(neighborhood, size=seq_len, replace=False)
        for step, off in enumerate(offsets):
            # neighborhoods wrap inside the cluster so coverage stays uniform
            item = base + (window_start + int(off)) % half
            reviews.append({
                "reviewerID": f"U{u}",
                "asin": f"B{item:05d}",
                "overall": float(rng.integers(1, 6)),
                "unixReviewTime": 1_300_000_000 + u * 10_000 + step * 100,
            })
    return _write_raw(Path(out_dir), "clusters", reviews, list(range(n_items)))


def gen_mixed(out_dir: str | Path, seed: int, n_users: int = 1000, n_items: int = 600) -> dict[str, str]:
    """Zipf catalog with a heavy sequence-length tail (some users past 22 items)."""
    rng = derive_rng(seed, STAGE_SYNTH, FIXTURE_TAGS["mixed"])
    weights = 1.0 / np.arange(1, n_items + 1, dtype=np.float64)
    weights /= weights.sum()
    reviews = []
    for u in range(n_users):
        length = 5 + int(min(rng.pareto(1.2) * 3, 35.0))
        items = rng.choice(n_items, size=length, replace=False, p=weights)
        for step, item in enumerate(items):
            reviews.append({
                "reviewerID": f"U{u}",
                "asin": f"B{int(item):05d}",
                "overall": float(rng.integers(1, 6)),
                "unixReviewTime": 1_300_000_000 + u * 100_000 + step * 100,
            })
    return _write_raw(Path(out_dir), "mixed", reviews, list(range(n_items)), brands=True)


def gen_tiny(out_dir: str | Path, seed: int, n_users: int = 500, n_items: int = 100,
             walk_len: int = 10) -> dict[str, str]:
    """Chain-structured 500-user corpus with a compact title vocabulary."""
    rng = derive_rng(seed, STAGE_SYNTH, FIXTURE_TAGS["tiny"])
    reviews = _chain_reviews(n_users, n_items, walk_len, rng)
    return _write_raw(Path(out_dir), "tiny", reviews, list(range(n_items)))


GENERATORS = {
    "chain": gen_chain,
    "clusters": gen_clusters,
    "mixed": gen_mixed,
    "tiny": gen_tiny,
}


def generate_fixture(name: str, out_dir: str | Path, seed: int) -> dict[str, str]:
    if name not in GENERATORS:
        raise ValueError(f"unknown fixture: {name} (have {sorted(GENERATORS)})")
    return GENERATORS[name](out_dir, seed)
