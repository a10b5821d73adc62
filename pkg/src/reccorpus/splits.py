"""Display-ID mapping and leave-one-out splitting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .ingest import UserSequence
from .io import make_header
from .rng import STAGE_IDMAP, STAGE_VALID_USERS, derive_rng


@dataclass
class IdMap:
    """Bijection item_idx <-> short display ID "I{n}" via a seeded permutation."""

    forward: list[str]
    inverse: dict[str, int]
    seed: int

    def display(self, item_idx: int) -> str:
        return self.forward[item_idx]

    def item_idx(self, display_id: str) -> int:
        return self.inverse[display_id]

    def __len__(self) -> int:
        return len(self.forward)


@dataclass
class UserSplit:
    # (item_idx, rating, timestamp) triples
    train: list[tuple[int, float, int]]
    valid: tuple[int, float, int]
    test: tuple[int, float, int]

    def full(self) -> list[tuple[int, float, int]]:
        return [*self.train, self.valid, self.test]

    def full_item_set(self) -> set[int]:
        return {i for i, _, _ in self.full()}


@dataclass
class DatasetSplit:
    users: list[UserSplit]
    valid_user_set: set[int] = field(default_factory=set)

    @property
    def n_users(self) -> int:
        return len(self.users)


def build_id_map(n_items: int, seed: int) -> IdMap:
    """Seeded uniform permutation of 0..n_items-1; item_idx j maps to "I{perm[j]}"."""
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    rng = derive_rng(seed, STAGE_IDMAP)
    perm = rng.permutation(n_items)
    forward = [f"I{int(n)}" for n in perm]
    inverse = {d: j for j, d in enumerate(forward)}
    return IdMap(forward=forward, inverse=inverse, seed=seed)


def apply_leave_one_out(sequences: list[UserSequence]) -> DatasetSplit:
    """Per user: last item to test, second-to-last to valid, the rest to train."""
    users: list[UserSplit] = []
    for seq in sequences:
        if len(seq.items) < 3:
            raise ValueError(f"user {seq.user_raw_id}: sequence too short to partition")
        users.append(UserSplit(train=list(seq.items[:-2]), valid=seq.items[-2], test=seq.items[-1]))
    return DatasetSplit(users=users)


def select_validation_users(split: DatasetSplit, seed: int, n: int = 3000) -> set[int]:
    """Seeded uniform sample of min(n, n_users) users, without replacement."""
    rng = derive_rng(seed, STAGE_VALID_USERS)
    k = min(n, split.n_users)
    chosen = rng.choice(split.n_users, size=k, replace=False)
    return {int(u) for u in chosen}


def save_id_map(path: str | Path, id_map: IdMap, item_raw_ids: list[str], config: dict[str, Any]) -> None:
    """Two-column mapping file (raw item ID, display ID) shared with external trainers."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = make_header(id_map.seed, config)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#" + json.dumps({"_header": header}, ensure_ascii=False) + "\n")
        for j, raw in enumerate(item_raw_ids):
            fh.write(f"{raw}\t{id_map.forward[j]}\n")


def load_id_map(path: str | Path) -> tuple[IdMap, list[str], dict[str, Any]]:
    forward: list[str] = []
    raw_ids: list[str] = []
    header: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                header = json.loads(line[1:]).get("_header", {})
                continue
            raw, display = line.split("\t")
            raw_ids.append(raw)
            forward.append(display)
    inverse = {d: j for j, d in enumerate(forward)}
    return IdMap(forward=forward, inverse=inverse, seed=int(header.get("seed", -1))), raw_ids, header


def save_split(path: str | Path, split: DatasetSplit, seed: int, config: dict[str, Any]) -> None:
    from .io import write_jsonl

    payload = {
        "users": [
            {"train": [[i, r, t] for i, r, t in u.train], "valid": list(u.valid), "test": list(u.test)}
            for u in split.users
        ],
        "valid_user_set": sorted(split.valid_user_set),
    }
    write_jsonl(path, make_header(seed, config), [payload])


def load_split(path: str | Path) -> tuple[DatasetSplit, dict[str, Any]]:
    from .io import read_jsonl

    header, rows = read_jsonl(path)
    if header is None or len(rows) != 1:
        raise ValueError(f"{path}: not a split file")
    payload = rows[0]
    users = [
        UserSplit(
            train=[(int(i), float(r), int(t)) for i, r, t in u["train"]],
            valid=(int(u["valid"][0]), float(u["valid"][1]), int(u["valid"][2])),
            test=(int(u["test"][0]), float(u["test"][1]), int(u["test"][2])),
        )
        for u in payload["users"]
    ]
    return DatasetSplit(users=users, valid_user_set=set(payload["valid_user_set"])), header
