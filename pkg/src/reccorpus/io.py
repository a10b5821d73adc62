"""File helpers: headered JSONL, config digests, TSV id maps."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from . import __version__

TOOL_NAME = "reccorpus"


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


def write_jsonl(path: str | Path, header: dict[str, Any], rows: Iterable[dict[str, Any]]) -> int:
    """Write a headered JSONL file; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_header": header}, ensure_ascii=False) + "\n")
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> tuple[dict[str, Any] | None, list[dict[str, Any]]]:
    """Read a JSONL file, splitting off the header line if present."""
    header = None
    rows: list[dict[str, Any]] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if i == 0 and isinstance(obj, dict) and "_header" in obj:
                header = obj["_header"]
            else:
                rows.append(obj)
    return header, rows


def iter_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    """Stream data rows of a headered JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if i == 0 and isinstance(obj, dict) and "_header" in obj:
                continue
            yield obj


def read_header(path: str | Path) -> dict[str, Any] | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        return None
    if first.startswith("#"):
        first = first[1:]
    try:
        obj = json.loads(first)
    except json.JSONDecodeError:
        return None
    if isinstance(obj, dict) and "_header" in obj:
        return obj["_header"]
    return None


def check_header_seed(path: str | Path, expected_seed: int) -> None:
    """Fatal if the file's recorded seed disagrees with the run seed."""
    header = read_header(path)
    if header is None:
        raise ValueError(f"{path}: missing header line")
    if header.get("seed") != expected_seed:
        raise ValueError(
            f"{path}: header seed {header.get('seed')} does not match run seed {expected_seed}"
        )
