"""Shared fixtures: a generated tiny corpus and a briefly-trained checkpoint."""

from __future__ import annotations

import json
import re
import subprocess
from pathlib import Path

import pytest

TASK_FILES = {
    "retrieval": "tiny.retrieval.train.jsonl",
    "ranking": "tiny.ranking.train.jsonl",
    "rating": "tiny.rating.train.jsonl",
    "mim": "tiny.mim.train.epoch0.jsonl",
    "mlm": "tiny.mlm.train.epoch0.jsonl",
    "bpr": "tiny.bpr.train.epoch0.jsonl",
}


def run_cli(*argv: str, cwd: str | Path | None = None) -> subprocess.CompletedProcess:
    proc = subprocess.run(list(argv), capture_output=True, text=True, cwd=cwd)
    if proc.returncode != 0:
        raise AssertionError(f"{argv[0]} failed:\n{proc.stdout}\n{proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory: pytest.TempPathFactory) -> dict:
    """500-user chain corpus produced by the corpus pipeline CLI.

    The 100-item catalog cannot host 100-candidate ranking pools (a user's
    own items are excluded), so pools are 50 here.
    """
    root = tmp_path_factory.mktemp("tiny_corpus")
    run_cli("reccorpus", "synth", "--fixture", "tiny", "--out", str(root / "raw"))
    run_cli(
        "reccorpus", "ingest",
        "--reviews", str(root / "raw" / "tiny.reviews.jsonl"),
        "--meta", str(root / "raw" / "tiny.meta.jsonl"),
        "--snapshot", str(root / "snap.jsonl"),
    )
    run_cli(
        "reccorpus", "split",
        "--snapshot", str(root / "snap.jsonl"),
        "--out-split", str(root / "split.jsonl"),
        "--out-idmap", str(root / "idmap.tsv"),
    )
    run_cli(
        "reccorpus", "gen",
        "--snapshot", str(root / "snap.jsonl"),
        "--split", str(root / "split.jsonl"),
        "--idmap", str(root / "idmap.tsv"),
        "--out", str(root / "corpus"),
        "--dataset", "tiny",
        "--epochs", "1",
        "--pool-size", "50",
        "--tasks", ",".join(TASK_FILES),
    )
    corpus = root / "corpus"
    return {
        "root": root,
        "idmap": root / "idmap.tsv",
        "train_files": [corpus / name for name in TASK_FILES.values()],
        "retrieval_test": corpus / "tiny.retrieval.test.jsonl",
        "retrieval_truth": corpus / "tiny.retrieval.test.truth.jsonl",
        "rating_test": corpus / "tiny.rating.test.jsonl",
        "rating_truth": corpus / "tiny.rating.test.truth.jsonl",
    }


@pytest.fixture(scope="session")
def smoke_ckpt(tiny_corpus: dict, tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Checkpoint trained just long enough to exercise the full save format."""
    from finetune_adapter.config import AdapterConfig
    from finetune_adapter.train import train

    out = tmp_path_factory.mktemp("ckpt") / "smoke"
    cfg = AdapterConfig(
        corpus_files=tuple(str(p) for p in tiny_corpus["train_files"]),
        idmap_path=str(tiny_corpus["idmap"]),
        steps=30,
        batch_size=8,
        seed=7,
    )
    train(cfg, out, log_every=0)
    return out


def corpus_slice(src: Path, dst: Path, n: int) -> list[dict]:
    """First n data rows of a headered corpus file, rewritten to dst."""
    lines = src.read_text(encoding="utf-8").splitlines()
    keep = lines[: n + 1]
    dst.write_text("\n".join(keep) + "\n", encoding="utf-8")
    return [json.loads(line) for line in keep[1:]]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = {}
    labels = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for outcome, label in labels.items():
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_criterion_(\d+)_(\w+)", nodeid)
            if m and getattr(rep, "when", "call") in ("call", "setup"):
                rows[int(m.group(1))] = (label, m.group(2))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for n in sorted(rows):
            label, name = rows[n]
            terminalreporter.write_line(f"criterion {n} ({name.replace('_', ' ')}): {label}")
