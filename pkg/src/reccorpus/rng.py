"""Seed derivation: one global seed fans out to independent per-use streams."""

from __future__ import annotations

import numpy as np

# Stage tags keep streams for different pipeline stages disjoint.
STAGE_IDMAP = 1
STAGE_VALID_USERS = 2
STAGE_GEN = 3
STAGE_TRAIN = 4
STAGE_SYNTH = 5

TASK_TAGS = {
    "retrieval": 11,
    "ranking": 12,
    "rating": 13,
    "mim": 14,
    "mlm": 15,
    "bpr": 16,
    "ie": 17,
}

SPLIT_TAGS = {"train": 0, "valid": 1, "test": 2}


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream addressed by (seed, *keys).

    SeedSequence mixes the key tuple collision-resistantly, so streams for
    distinct tuples are independent and reproducible across runs and platforms.
    """
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return np.random.default_rng(ss)


def sample_rng(seed: int, task: str, split: str, user_idx: int, window_idx: int, epoch: int) -> np.random.Generator:
    """Per-sample stream: mix(seed, task, split, user, window, epoch)."""
    return derive_rng(seed, STAGE_GEN, TASK_TAGS[task], SPLIT_TAGS[split], user_idx, window_idx, epoch)
