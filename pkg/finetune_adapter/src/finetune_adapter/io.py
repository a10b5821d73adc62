"""Corpus-contract file helpers: headered JSONL, the id-map TSV, config digests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from . import __version__

TOOL_NAME = "finetune-adapter"


def config_digest(config: dict[str, Any]) -> str:
    """Short stable digest of a config dict (canonical JSON, sha256)."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def make_header(seed: int, config: dict[str, Any]) -> dict[str, Any]:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "seed": seed,
        "config_digest": config_digest(config),
    }


def read_corpus(path: str | Path) -> tuple[list[dict[str, Any]], int]:
    """Data rows of a headered corpus JSONL file, plus a malformed-line count.

    The producer's first line is {"_header": ...}; rows missing the sample
    fields (or not parsing as JSON) are skipped and counted, per the contract.
    """
    rows: list[dict[str, Any]] = []
    malformed = 0
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                malformed += 1
                continue
            if i == 0 and isinstance(obj, dict) and "_header" in obj:
                continue
            if not isinstance(obj, dict) or not {"id", "task", "input", "output"} <= obj.keys():
                malformed += 1
                continue
            rows.append(obj)
    return rows, malformed


def write_predictions(
    path: str | Path, seed: int, config: dict[str, Any], rows: Iterable[dict[str, Any]]
) -> int:
    """Write a prediction file in the shared headered-JSONL shape."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_header": make_header(seed, config)}, ensure_ascii=False) + "\n")
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_id_map(path: str | Path) -> list[str]:
    """Display-ID column of the two-column id-map TSV (comment line skipped)."""
    displays: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            _, display = line.split("\t")
            displays.append(display)
    if not displays:
        raise ValueError(f"{path}: id map has no entries")
    return displays
