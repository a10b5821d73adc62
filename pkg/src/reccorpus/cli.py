"""Command-line pipeline: synth, ingest, split, gen, train, predict, eval, stats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import ingest as ing
from . import metrics as met
from . import models as mdl
from . import sample_gen as sg
from . import splits as sp
from . import synth
from .io import check_header_seed, iter_jsonl, make_header, read_header, write_jsonl

DEFAULTS: dict[str, Any] = {
    "seed": 42,
    "window_size": 20,
    "mask_ratio": 0.20,
    "pool_size": 100,
    "epochs": 1,
    "tasks": ",".join(sg.REC_TASKS + sg.AUX_TASKS),
    "jobs": 1,
    "k_core": 5,
    "valid_users": 3000,
    "dim": 32,
    "lr": 0.05,
    "l2": 1e-4,
    "train_epochs": 30,
    "k_max": 20,
}


def _merged(args: argparse.Namespace) -> dict[str, Any]:
    """Layer defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _gen_config(cfg: dict[str, Any]) -> sg.GenConfig:
    tasks = tuple(t for t in str(cfg["tasks"]).split(",") if t)
    return sg.GenConfig(
        window_size=int(cfg["window_size"]),
        mask_ratio=float(cfg["mask_ratio"]),
        pool_size=int(cfg["pool_size"]),
        seed=int(cfg["seed"]),
        epochs=int(cfg["epochs"]),
        tasks=tasks,
    )


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    paths = synth.generate_fixture(args.fixture, args.out, int(cfg["seed"]))
    print(json.dumps(paths))
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    seed = int(cfg["seed"])
    with open(args.reviews, "rb") as fh:
        interactions, skipped = ing.parse_interactions(fh, args.format)
    catalog: dict[str, ing.ItemMetadata] = {}
    if args.meta:
        with open(args.meta, "rb") as fh:
            catalog = ing.parse_metadata(fh)
    interactions = ing.dedupe(interactions)
    interactions = ing.k_core_filter(interactions, int(cfg["k_core"]))
    sequences, item_raw_ids = ing.build_sequences(interactions)
    stats = ing.compute_stats(sequences, len(item_raw_ids))
    ing.save_snapshot(
        args.snapshot, sequences, item_raw_ids, catalog, seed,
        {"format": args.format, "k_core": int(cfg["k_core"])},
    )
    print(
        f"ingested: users={stats.n_users} items={stats.n_items} "
        f"interactions={stats.n_interactions} sparsity={stats.sparsity:.2f} "
        f"skipped={skipped}"
    )
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    seed = int(cfg["seed"])
    check_header_seed(args.snapshot, seed)
    sequences, item_raw_ids, _, _ = ing.load_snapshot(args.snapshot)
    id_map = sp.build_id_map(len(item_raw_ids), seed)
    split = sp.apply_leave_one_out(sequences)
    split.valid_user_set = sp.select_validation_users(split, seed, int(cfg["valid_users"]))
    sp.save_split(args.out_split, split, seed, {"valid_users": int(cfg["valid_users"])})
    sp.save_id_map(args.out_idmap, id_map, item_raw_ids, {"n_items": len(item_raw_ids)})
    n_train = sum(len(u.train) for u in split.users)
    print(
        f"split: users={split.n_users} train_interactions={n_train} "
        f"valid_users={len(split.valid_user_set)}"
    )
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    gen_cfg = _gen_config(cfg)
    for path in (args.snapshot, args.split, args.idmap):
        check_header_seed(path, gen_cfg.seed)
    _, item_raw_ids, catalog, _ = ing.load_snapshot(args.snapshot)
    split, _ = sp.load_split(args.split)
    id_map, _, _ = sp.load_id_map(args.idmap)
    if not gen_cfg.tasks:
        print("warning: task set is empty; nothing to generate", file=sys.stderr)
        return 0
    summary = sg.generate_corpus(
        split, id_map, item_raw_ids, catalog, gen_cfg, args.out, args.dataset
    )
    for warning in summary["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    for name in summary["files"]:
        if name in summary["counts"]:
            print(f"{name}: {summary['counts'][name]} samples")
    summary_path = Path(args.out) / f"{args.dataset}.gen_summary.json"
    write_jsonl(summary_path, make_header(gen_cfg.seed, gen_cfg.to_dict()), [summary])
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    seed = int(cfg["seed"])
    check_header_seed(args.split, seed)
    check_header_seed(args.idmap, seed)
    split, _ = sp.load_split(args.split)
    id_map, _, _ = sp.load_id_map(args.idmap)
    bpr_cfg = mdl.BprConfig(
        dim=int(cfg["dim"]), lr=float(cfg["lr"]), l2=float(cfg["l2"]),
        epochs=int(cfg["train_epochs"]),
    )
    pop = sg.PopularityTable.from_split(split, len(id_map))
    model, epoch_loss = mdl.train_bpr_mf(split, pop, bpr_cfg, seed, len(id_map))
    mdl.save_factor_model(args.out, model, seed, bpr_cfg)
    losses = " ".join(f"{x:.4f}" for x in epoch_loss[:5])
    print(f"trained bpr: dim={bpr_cfg.dim} epochs={bpr_cfg.epochs} first_losses=[{losses}]")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    gen_cfg = _gen_config(cfg)
    check_header_seed(args.split, gen_cfg.seed)
    check_header_seed(args.idmap, gen_cfg.seed)
    split, _ = sp.load_split(args.split)
    id_map, _, _ = sp.load_id_map(args.idmap)
    factor_model = None
    if args.model == "bpr":
        if not args.model_file:
            raise SystemExit("--model-file is required for --model bpr")
        factor_model, model_seed = mdl.load_factor_model(args.model_file)
        if model_seed != gen_cfg.seed:
            raise SystemExit(
                f"model seed {model_seed} does not match run seed {gen_cfg.seed}"
            )
    n = mdl.emit_predictions(
        args.model, split, id_map, gen_cfg, args.task, args.out,
        mode=args.mode, k_max=int(cfg["k_max"]), factor_model=factor_model,
    )
    print(f"predicted: model={args.model} task={args.task} mode={args.mode} records={n}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    id_map = None
    if args.idmap:
        id_map, _, _ = sp.load_id_map(args.idmap)
    report = met.evaluate_run(args.pred, args.truth, args.task, id_map)
    print(report.to_text())
    if args.out:
        seed = read_header(args.pred) or {}
        write_jsonl(
            args.out,
            make_header(int(seed.get("seed", -1)), {"task": args.task}),
            [report.to_json()],
        )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    sequences, item_raw_ids, _, header = ing.load_snapshot(args.snapshot)
    stats = ing.compute_stats(sequences, len(item_raw_ids))
    print(f"users: {stats.n_users}")
    print(f"items: {stats.n_items}")
    print(f"interactions: {stats.n_interactions}")
    print(f"sparsity: {stats.sparsity:.2f}")
    if args.split:
        split, _ = sp.load_split(args.split)
        cfg = _merged(args)
        w = int(cfg["window_size"])
        n_windows = sg.count_train_windows(split, w)
        print(f"train_windows (w={w}): {n_windows}")
        print(f"valid_samples: {len(split.valid_user_set)}")
        print(f"test_samples: {split.n_users}")
    if args.corpus_dir and args.dataset:
        corpus_dir = Path(args.corpus_dir)
        for path in sorted(corpus_dir.glob(f"{args.dataset}.*.jsonl")):
            if path.name.endswith(".truth.jsonl") or path.name.endswith("gen_summary.json"):
                continue
            n = sum(1 for _ in iter_jsonl(path))
            print(f"{path.name}: {n}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reccorpus", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("synth", help="write a synthetic raw-log fixture")
    common(p)
    p.add_argument("--fixture", required=True, choices=sorted(synth.GENERATORS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse, dedupe, k-core filter, build sequences")
    common(p)
    p.add_argument("--reviews", required=True)
    p.add_argument("--meta")
    p.add_argument("--format", default="amazon-review-jsonl", choices=["amazon-review-jsonl", "csv"])
    p.add_argument("--snapshot", required=True, help="output snapshot path")
    p.add_argument("--k-core", dest="k_core", type=int, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="leave-one-out split and display-ID map")
    common(p)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out-split", required=True)
    p.add_argument("--out-idmap", required=True)
    p.add_argument("--valid-users", dest="valid_users", type=int, default=None)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("gen", help="generate corpus JSONL files")
    common(p)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--idmap", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--tasks", default=None, help="comma-separated task subset")
    p.add_argument("--window-size", dest="window_size", type=int, default=None)
    p.add_argument("--mask-ratio", dest="mask_ratio", type=float, default=None)
    p.add_argument("--pool-size", dest="pool_size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker cap; generation currently runs one deterministic worker")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the BPR-MF reference model")
    common(p)
    p.add_argument("--split", required=True)
    p.add_argument("--idmap", required=True)
    p.add_argument("--out", required=True, help="model .npz path")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--train-epochs", dest="train_epochs", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="emit reference-model predictions")
    common(p)
    p.add_argument("--model", required=True, choices=["bpr", "popularity", "markov", "history"])
    p.add_argument("--model-file")
    p.add_argument("--split", required=True)
    p.add_argument("--idmap", required=True)
    p.add_argument("--task", required=True, choices=["retrieval", "ranking", "rating"])
    p.add_argument("--mode", default="test", choices=["valid", "test"])
    p.add_argument("--out", required=True)
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--window-size", dest="window_size", type=int, default=None)
    p.add_argument("--pool-size", dest="pool_size", type=int, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against truth")
    common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--task", required=True, choices=["retrieval", "ranking", "rating"])
    p.add_argument("--idmap")
    p.add_argument("--out", help="write the report as headered JSONL")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="dataset and corpus statistics")
    common(p)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--split")
    p.add_argument("--corpus-dir", dest="corpus_dir")
    p.add_argument("--dataset")
    p.add_argument("--window-size", dest="window_size", type=int, default=None)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
