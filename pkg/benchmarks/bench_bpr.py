"""Time the BPR-MF SGD kernel: compiled path vs pure-numpy fallback."""

from __future__ import annotations

import argparse
import time

import numpy as np

from reccorpus._kernels import HAS_NUMBA, numba_enabled, run_bpr_sgd
from reccorpus.models import BprConfig, train_bpr_mf
from reccorpus.rng import STAGE_TRAIN, derive_rng
from reccorpus.sample_gen import PopularityTable
from reccorpus.splits import DatasetSplit, UserSplit


def synth_split(n_users: int, n_items: int, length: int, seed: int) -> DatasetSplit:
    rng = np.random.default_rng(seed)
    users = []
    for _ in range(n_users):
        items = rng.choice(n_items, size=length, replace=False)
        triples = [(int(i), 5.0, 100 + k) for k, i in enumerate(items)]
        users.append(UserSplit(train=triples[:-2], valid=triples[-2], test=triples[-1]))
    return DatasetSplit(users=users)


def run(split: DatasetSplit, n_items: int, cfg: BprConfig, seed: int, use_numba: bool,
        repeats: int) -> tuple[float, np.ndarray]:
    import os

    if use_numba:
        os.environ.pop("RECCORPUS_NO_NUMBA", None)
    else:
        os.environ["RECCORPUS_NO_NUMBA"] = "1"
    pop = PopularityTable.from_split(split, n_items)
    best = float("inf")
    factors = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        model, _ = train_bpr_mf(split, pop, cfg, seed, n_items)
        best = min(best, time.perf_counter() - t0)
        factors = model.user_factors
    return best, factors


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--users", type=int, default=2000)
    ap.add_argument("--items", type=int, default=1000)
    ap.add_argument("--length", type=int, default=12)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    split = synth_split(args.users, args.items, args.length, args.seed)
    cfg = BprConfig(dim=args.dim, epochs=args.epochs)
    steps = args.epochs * sum(len(u.train) for u in split.users)
    print(f"users={args.users} items={args.items} dim={args.dim} "
          f"epochs={args.epochs} sgd_steps={steps}")

    if HAS_NUMBA:
        # warm-up compile outside the timed region
        warm = synth_split(8, 20, 5, 0)
        run(warm, 20, BprConfig(dim=4, epochs=1), 0, use_numba=True, repeats=1)
        t_fast, f_fast = run(split, args.items, cfg, args.seed, True, args.repeats)
        print(f"numba kernel:    {t_fast:.3f}s  ({steps / t_fast / 1e6:.2f} M steps/s)")
    else:
        t_fast, f_fast = None, None
        print("numba kernel:    unavailable")

    t_slow, f_slow = run(split, args.items, cfg, args.seed, False, args.repeats)
    print(f"numpy fallback:  {t_slow:.3f}s  ({steps / t_slow / 1e6:.2f} M steps/s)")

    if t_fast is not None:
        print(f"speedup: {t_slow / t_fast:.1f}x")
        print(f"bit-identical factors: {np.array_equal(f_fast, f_slow)}")


if __name__ == "__main__":
    main()
