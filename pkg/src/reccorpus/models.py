"""Reference recommenders: popularity, History, first-order Markov, BPR-MF."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from ._kernels import run_bpr_sgd
from .io import make_header, write_jsonl
from .rng import STAGE_TRAIN, derive_rng, sample_rng
from .sample_gen import GenConfig, PopularityTable, _sid, enumerate_windows, make_ranking_pool
from .splits import DatasetSplit, IdMap


@dataclass
class BprConfig:
    dim: int = 32
    lr: float = 0.05
    l2: float = 1e-4
    epochs: int = 30

    def to_dict(self) -> dict[str, Any]:
        return {"dim": self.dim, "lr": self.lr, "l2": self.l2, "epochs": self.epochs}


@dataclass
class FactorModel:
    user_factors: np.ndarray  # n_users x d
    item_factors: np.ndarray  # n_items x d
    dim: int
    l2: float
    lr: float

    def score(self, user_idx: int, item_idx: int) -> float:
        return float(self.user_factors[user_idx] @ self.item_factors[item_idx])

    def score_all(self, user_idx: int) -> np.ndarray:
        return self.item_factors @ self.user_factors[user_idx]


def bpr_loss(model: FactorModel, u: int, i_pos: int, i_neg: int) -> float:
    """-log sigmoid(s(u,i+) - s(u,i-)) plus l2 on the three touched rows."""
    x = model.score(u, i_pos) - model.score(u, i_neg)
    reg = (
        float(model.user_factors[u] @ model.user_factors[u])
        + float(model.item_factors[i_pos] @ model.item_factors[i_pos])
        + float(model.item_factors[i_neg] @ model.item_factors[i_neg])
    )
    # -log sigmoid(x) = log(1 + exp(-x)), branch-stable
    return float(np.logaddexp(0.0, -x)) + model.l2 * reg


def bpr_grad(
    model: FactorModel, u: int, i_pos: int, i_neg: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradient of bpr_loss w.r.t. the user, positive, negative rows."""
    uf = model.user_factors[u]
    pf = model.item_factors[i_pos]
    nf = model.item_factors[i_neg]
    x = float(uf @ (pf - nf))
    if x >= 0.0:
        ex = math.exp(-x)
        g = -ex / (1.0 + ex)  # sigmoid(x) - 1
    else:
        ex = math.exp(x)
        g = -1.0 / (1.0 + ex)
    l2 = model.l2
    grad_u = g * (pf - nf) + 2.0 * l2 * uf
    grad_pos = g * uf + 2.0 * l2 * pf
    grad_neg = -g * uf + 2.0 * l2 * nf
    return grad_u, grad_pos, grad_neg


def train_bpr_mf(
    split: DatasetSplit,
    pop: PopularityTable,
    cfg: BprConfig,
    seed: int,
    n_items: int,
) -> tuple[FactorModel, np.ndarray]:
    """SGD on the pairwise objective; returns the model and per-epoch mean loss.

    Steps per epoch equal the number of train pairs; positives are sampled
    uniformly from the pairs, negatives by popularity excluding each user's
    full sequence. Deterministic per seed.
    """
    n_users = split.n_users
    pair_users = np.array(
        [u for u, user in enumerate(split.users) for _ in user.train], dtype=np.int64
    )
    pair_items = np.array(
        [i for user in split.users for i, _, _ in user.train], dtype=np.int64
    )
    if len(pair_users) == 0:
        raise ValueError("empty split: no train pairs")

    # CSR over each user's full item set, sorted for binary search
    user_ptr = np.zeros(n_users + 1, dtype=np.int64)
    owned: list[list[int]] = []
    for u, user in enumerate(split.users):
        items = sorted(user.full_item_set())
        owned.append(items)
        user_ptr[u + 1] = user_ptr[u] + len(items)
    user_items = np.array([i for items in owned for i in items], dtype=np.int64)

    n_positive_weight = int(np.count_nonzero(pop.counts))
    for u, items in enumerate(owned):
        eligible = n_positive_weight - sum(1 for i in items if pop.counts[i] > 0)
        if eligible < 1:
            raise ValueError(f"user {u} has no eligible negative item")

    rng = derive_rng(seed, STAGE_TRAIN)
    user_factors = rng.uniform(-0.05, 0.05, size=(n_users, cfg.dim))
    item_factors = rng.uniform(-0.05, 0.05, size=(n_items, cfg.dim))
    epoch_loss = np.zeros(cfg.epochs, dtype=np.float64)

    if cfg.epochs > 0:
        run_bpr_sgd(
            user_factors,
            item_factors,
            pair_users,
            pair_items,
            user_ptr,
            user_items,
            pop.cum,
            pop.total,
            cfg.lr,
            cfg.l2,
            cfg.epochs,
            rng,
            epoch_loss,
        )
    if not (np.isfinite(user_factors).all() and np.isfinite(item_factors).all()):
        raise FloatingPointError("BPR-MF diverged: non-finite factors")
    model = FactorModel(user_factors, item_factors, cfg.dim, cfg.l2, cfg.lr)
    return model, epoch_loss


class MarkovTable:
    """Successor counts over consecutive train pairs."""

    def __init__(self) -> None:
        self.successors: dict[int, Counter] = defaultdict(Counter)

    @classmethod
    def from_split(cls, split: DatasetSplit) -> "MarkovTable":
        table = cls()
        for user in split.users:
            items = [i for i, _, _ in user.train]
            for a, b in zip(items, items[1:]):
                table.successors[a][b] += 1
        return table

    def predict(self, last_item: int, k: int, pop: PopularityTable) -> list[int]:
        """Successors by count (ties by item index), popularity-padded to k."""
        succ = self.successors.get(last_item)
        ranked: list[int] = []
        if succ:
            ranked = [i for i, _ in sorted(succ.items(), key=lambda kv: (-kv[1], kv[0]))][:k]
        if len(ranked) < k:
            pad = [i for i in pop.top_k(k + len(ranked)) if i not in set(ranked)]
            ranked.extend(pad[: k - len(ranked)])
        return ranked


def markov_predict(table: MarkovTable, last_item: int, k: int, pop: PopularityTable) -> list[int]:
    return table.predict(last_item, k, pop)


def popularity_rank(pop: PopularityTable, k: int) -> list[int]:
    return pop.top_k(k)


def history_score(user_train: Sequence[tuple[int, float, int]]) -> float:
    """Fraction of train interactions the user liked (rating > 3); 0.5 if empty."""
    if not user_train:
        return 0.5
    return sum(1 for _, r, _ in user_train if r > 3) / len(user_train)


def save_factor_model(path: str | Path, model: FactorModel, seed: int, cfg: BprConfig) -> None:
    from . import __version__
    from .io import TOOL_NAME, config_digest

    np.savez(
        path,
        user_factors=model.user_factors,
        item_factors=model.item_factors,
        dim=model.dim,
        l2=model.l2,
        lr=model.lr,
        seed=seed,
        tool=TOOL_NAME,
        version=__version__,
        config_digest=config_digest(cfg.to_dict()),
    )


def load_factor_model(path: str | Path) -> tuple[FactorModel, int]:
    data = np.load(path)
    model = FactorModel(
        user_factors=data["user_factors"],
        item_factors=data["item_factors"],
        dim=int(data["dim"]),
        l2=float(data["l2"]),
        lr=float(data["lr"]),
    )
    return model, int(data["seed"])


def _ranked_ids(scores: np.ndarray, k: int, id_map: IdMap) -> list[str]:
    # ties broken by item index so orderings are scale-invariant and reproducible
    order = np.lexsort((np.arange(len(scores)), -scores))
    return [id_map.forward[int(i)] for i in order[:k]]


def emit_predictions(
    model_kind: str,
    split: DatasetSplit,
    id_map: IdMap,
    gen_cfg: GenConfig,
    task: str,
    out_path: str | Path,
    mode: str = "test",
    k_max: int = 20,
    factor_model: FactorModel | None = None,
) -> int:
    """Write one prediction record per evaluated user in the harness format.

    Ranking pools are regenerated from the same per-sample streams the corpus
    generator used, so candidates match the corpus meta field exactly.
    """
    if mode not in ("valid", "test"):
        raise ValueError("predictions are emitted for the valid or test split")
    if model_kind == "bpr" and factor_model is None:
        raise ValueError("bpr predictions need a trained factor model")
    n_items = len(id_map)
    pop = PopularityTable.from_split(split, n_items)
    markov = MarkovTable.from_split(split) if model_kind == "markov" else None

    def want_user(u: int) -> bool:
        return mode == "test" or u in split.valid_user_set

    def score_candidates(u: int, window_items: list, candidates: list[int]) -> list[int]:
        if model_kind == "bpr":
            scores = np.array([factor_model.score(u, i) for i in candidates])
        elif model_kind == "popularity":
            scores = pop.counts[candidates].astype(np.float64)
        elif model_kind == "markov":
            prev = window_items[-2][0]
            succ = markov.successors.get(prev, Counter())
            scores = np.array([float(succ.get(i, 0)) for i in candidates])
        else:
            raise ValueError(f"model {model_kind} does not rank candidates")
        order = np.lexsort((np.array(candidates), -scores))
        return [candidates[int(i)] for i in order]

    def records() -> Iterator[dict[str, Any]]:
        for u, user in enumerate(split.users):
            if not want_user(u):
                continue
            window = enumerate_windows(user, u, gen_cfg.window_size, mode)[0]
            sid = _sid(task, mode, u, window.start)
            if task == "retrieval":
                if model_kind == "bpr":
                    ids = _ranked_ids(factor_model.score_all(u), k_max, id_map)
                elif model_kind == "popularity":
                    ids = [id_map.forward[i] for i in pop.top_k(k_max)]
                elif model_kind == "markov":
                    prev = window.items[-2][0]
                    ids = [id_map.forward[i] for i in markov.predict(prev, k_max, pop)]
                else:
                    raise ValueError(f"model {model_kind} does not rank the catalog")
                yield {"sample_id": sid, "items": ids}
            elif task == "ranking":
                rng = sample_rng(gen_cfg.seed, "ranking", mode, u, window.start, 0)
                pool = make_ranking_pool(
                    user.full_item_set(), window.items[-1][0], pop, gen_cfg.pool_size, rng
                )
                ranked = score_candidates(u, window.items, pool)
                yield {"sample_id": sid, "items": [id_map.forward[i] for i in ranked]}
            elif task == "rating":
                if model_kind == "history":
                    score = history_score(user.train)
                elif model_kind == "bpr":
                    score = 1.0 / (1.0 + math.exp(-factor_model.score(u, window.items[-1][0])))
                else:
                    raise ValueError(f"model {model_kind} does not score ratings")
                yield {"sample_id": sid, "score": score}
            else:
                raise ValueError(f"unknown prediction task: {task}")

    header = make_header(gen_cfg.seed, {"model": model_kind, "task": task, "mode": mode, **gen_cfg.to_dict()})
    return write_jsonl(out_path, header, records())
