"""Shared fixtures: pinned prompt fixture data and prebuilt pipeline runs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from reccorpus import cli
from reccorpus import ingest as ing
from reccorpus import io as rcio
from reccorpus import splits as sp
from reccorpus import synth

GOLDEN_DIR = Path(__file__).parent / "golden"

# The pinned prompt fixture: one user's ten-item purchase history with real
# catalog titles, used by the byte-for-byte template tests.
FIXTURE_TITLES = {
    "I9762": "Winstonia's 8 Wheels Combo Set Nail Art Polymer Slices Fimo Decal Pieces "
             "Accessories - Butterflies, Bows, Animals, Fruit, Flowers, Dragonflies, "
             "Cupcakes, Hearts",
    "I8123": "MASH Rhinestones 2400 Piece 12 Color Nail Art Nailart Manicure Wheels",
    "I158": "Aveeno Clear Complexion Daily Moisturizer, 4 Ounce",
    "I5324": "Bdellium Tools Professional Antibacterial Makeup Brush Studio Line - "
             "Precision Kabuki Airbrushed Effect 957",
    "I7522": "Bdellium Tools Professional Makeup Brush Green Bambu Series Smoky Eyes "
             "5pc. Brush Set",
    "I7647": "real Techniques Stippling Brush",
    "I7811": "Maybelline New York Color Sensational High Shine Lipcolor, Coral Lustre "
             "840, 0.12 Ounce",
    "I9440": "Bed Head BH313 Orange Crush 1-inch Styler",
    "I5046": "Herstyler Baby Curl Curling Iron, Purple",
    "I3977": "L'Oreal Paris HiP Studio Secrets Professional Color Truth Cream Eyeliner, "
             "Brown, 0.159 Ounce",
    "I4168": "Sulfur Soap with Lanolin",
}
FIXTURE_SEQUENCE = [
    "I9762", "I8123", "I158", "I5324", "I7522",
    "I7647", "I7811", "I9440", "I5046", "I3977",
]
# ratings chosen so likes/dislikes partition the pinned rating prompt exactly
FIXTURE_RATINGS = {
    "I7522": 5.0, "I7647": 2.0, "I7811": 4.0, "I9440": 1.0, "I5046": 3.0, "I3977": 2.0,
}


def golden(name: str) -> str:
    return (GOLDEN_DIR / f"{name}.txt").read_text(encoding="utf-8")


def fixture_item(display_id: str) -> tuple[str, str]:
    return display_id, FIXTURE_TITLES[display_id]


def run_cli(*args: str) -> int:
    return cli.main([str(a) for a in args])


@dataclass
class Pipeline:
    """Artifacts of one synth->ingest->split run."""

    raw_dir: Path
    snapshot: Path
    split_path: Path
    idmap_path: Path
    seed: int

    def load_split(self) -> sp.DatasetSplit:
        split, _ = sp.load_split(self.split_path)
        return split

    def load_id_map(self) -> sp.IdMap:
        id_map, _, _ = sp.load_id_map(self.idmap_path)
        return id_map

    def load_snapshot(self):
        return ing.load_snapshot(self.snapshot)


def build_pipeline(root: Path, fixture: str, seed: int = 42) -> Pipeline:
    raw_dir = root / "raw"
    paths = synth.generate_fixture(fixture, raw_dir, seed)
    snapshot = root / "snapshot.jsonl"
    split_path = root / "split.jsonl"
    idmap_path = root / "idmap.tsv"
    assert run_cli(
        "ingest", "--reviews", paths["reviews"], "--meta", paths["meta"],
        "--snapshot", snapshot, "--seed", seed,
    ) == 0
    assert run_cli(
        "split", "--snapshot", snapshot, "--out-split", split_path,
        "--out-idmap", idmap_path, "--seed", seed,
    ) == 0
    return Pipeline(raw_dir, snapshot, split_path, idmap_path, seed)


@dataclass
class Corpus:
    """One generated corpus directory plus the pipeline that produced it."""

    dir: Path
    dataset: str
    pipeline: Pipeline
    pool_size: int
    epochs: int

    def path(self, task: str, split: str, epoch: int | None = None, truth: bool = False) -> Path:
        name = f"{self.dataset}.{task}.{split}"
        if epoch is not None:
            name += f".epoch{epoch}"
        name += ".truth.jsonl" if truth else ".jsonl"
        return self.dir / name

    def read(self, task: str, split: str, epoch: int | None = None, truth: bool = False):
        return rcio.read_jsonl(self.path(task, split, epoch, truth))


def build_corpus(out: Path, pipeline: Pipeline, dataset: str, pool_size: int,
                 epochs: int, tasks: str | None = None) -> Corpus:
    args = [
        "gen", "--snapshot", pipeline.snapshot, "--split", pipeline.split_path,
        "--idmap", pipeline.idmap_path, "--out", out, "--dataset", dataset,
        "--pool-size", pool_size, "--epochs", epochs, "--seed", pipeline.seed,
    ]
    if tasks:
        args += ["--tasks", tasks]
    assert run_cli(*args) == 0
    return Corpus(out, dataset, pipeline, pool_size, epochs)


@pytest.fixture(scope="session")
def chain_pipeline(tmp_path_factory) -> Pipeline:
    return build_pipeline(tmp_path_factory.mktemp("chain"), "chain")


@pytest.fixture(scope="session")
def clusters_pipeline(tmp_path_factory) -> Pipeline:
    return build_pipeline(tmp_path_factory.mktemp("clusters"), "clusters")


@pytest.fixture(scope="session")
def mixed_pipeline(tmp_path_factory) -> Pipeline:
    return build_pipeline(tmp_path_factory.mktemp("mixed"), "mixed")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    import re

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


@pytest.fixture(scope="session")
def chain_corpus(tmp_path_factory, chain_pipeline) -> Corpus:
    return build_corpus(tmp_path_factory.mktemp("chain_corpus"), chain_pipeline,
                        "chain", pool_size=40, epochs=2)


@pytest.fixture(scope="session")
def mixed_corpus(tmp_path_factory, mixed_pipeline) -> Corpus:
    return build_corpus(tmp_path_factory.mktemp("mixed_corpus"), mixed_pipeline,
                        "mixed", pool_size=100, epochs=2,
                        tasks="retrieval,ranking,rating,mim,mlm,bpr,ie")
