"""Command-line entry points: train a checkpoint, emit prediction files."""

from __future__ import annotations

import argparse
import sys

from .config import AdapterConfig, load_config_file, parse_weights
from .predict import predict
from .train import train


def _build_train_config(args: argparse.Namespace) -> AdapterConfig:
    merged: dict = {}
    if args.config:
        merged.update(load_config_file(args.config))
    flags = {
        "corpus_files": tuple(args.corpus) if args.corpus else None,
        "idmap_path": args.idmap,
        "base_model": args.base_model,
        "steps": args.steps,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "warmup_steps": args.warmup_steps,
        "beam_width": args.beam,
        "span_ratio": args.span_ratio,
        "mean_span": args.mean_span,
        "max_input_tokens": args.max_input,
        "max_target_tokens": args.max_target,
        "weights": parse_weights(args.weights) if args.weights else None,
        "seed": args.seed,
    }
    merged.update({k: v for k, v in flags.items() if v is not None})
    if not merged.get("corpus_files"):
        raise ValueError("at least one --corpus file is required")
    if not merged.get("idmap_path"):
        raise ValueError("--idmap is required")
    return AdapterConfig(**merged)


def cmd_train(args: argparse.Namespace) -> None:
    cfg = _build_train_config(args)
    meta = train(cfg, args.out, log_every=args.log_every)
    loss = meta["final_loss"]
    shown = "n/a" if loss is None else f"{loss:.4f}"
    print(
        f"trained: model={cfg.base_model} steps={cfg.steps} final_loss={shown} "
        f"malformed_lines={meta['n_malformed']}"
    )


def cmd_predict(args: argparse.Namespace) -> None:
    summary = predict(
        args.ckpt,
        args.corpus,
        args.task,
        args.out,
        beam=args.beam,
        batch_size=args.batch_size,
        max_new_tokens=args.max_new,
    )
    print(
        f"predicted: task={summary['task']} records={summary['records']} "
        f"beam={summary['beam']} malformed_lines={summary['malformed']}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finetune-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune on corpus files, save a checkpoint")
    p.add_argument("--corpus", action="append", help="corpus JSONL (repeatable)")
    p.add_argument("--idmap", help="id-map TSV from the corpus pipeline")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--base-model", dest="base_model")
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--warmup-steps", dest="warmup_steps", type=int)
    p.add_argument("--beam", type=int, help="default beam width stored in the checkpoint")
    p.add_argument("--span-ratio", dest="span_ratio", type=float)
    p.add_argument("--mean-span", dest="mean_span", type=int)
    p.add_argument("--max-input", dest="max_input", type=int)
    p.add_argument("--max-target", dest="max_target", type=int)
    p.add_argument("--weights", help="task mixture weights, e.g. retrieval=2,mim=1")
    p.add_argument("--seed", type=int)
    p.add_argument("--log-every", dest="log_every", type=int, default=100)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="run a checkpoint over a corpus file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--corpus", required=True, help="test/valid corpus JSONL")
    p.add_argument("--task", required=True, choices=["retrieval", "ranking", "rating"])
    p.add_argument("--out", required=True, help="prediction JSONL path")
    p.add_argument("--beam", type=int, help="override the checkpoint beam width")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=16)
    p.add_argument("--max-new", dest="max_new", type=int, default=8)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValueError as exc:
        sys.exit(f"finetune-adapter {args.command}: {exc}")


if __name__ == "__main__":
    main()
