"""Shared fixtures: a tiny hand-checkable corpus in a 4-d embedding space.

The embedding geometry is chosen so every neighbor list, weight and score
can be verified by hand (and is, in tests/oracles.py). Three classes:
Sports ("sports"), Business ("business"), NaturalPlace ("river", "lake",
"mountain"). Example ex4 talks about a music festival, which only enters
Sports' neighbor list at k >= 3, so accuracy improves from 5/6 to 6/6
when k grows from 2 to 4.
"""

import json

import numpy as np
import pytest

from npprompt.backend import FileBackend
from npprompt.evaluation import Pipeline
from npprompt.prompting import parse_template
from npprompt.tensorio import (
    LogitsBatch,
    VocabEntry,
    Vocabulary,
    read_dataset,
    write_manifest,
    write_tensor,
    write_vocab,
)
from npprompt.verbalizer import LabelSpec

MICRO_VOCAB = [
    (0, "<s>", True),
    (1, "<mask>", True),
    (2, " sports", False),
    (3, " game", False),
    (4, " business", False),
    (5, " market", False),
    (6, " river", False),
    (7, " lake", False),
    (8, " mountain", False),
    (9, " music", False),
]

MICRO_EMBEDDINGS = [
    [0.5, 0.5, 0.5, 0.5],   # <s>: near everything, must never be a neighbor
    [-1.0, 0.0, 0.0, 0.0],  # <mask>
    [1.0, 0.0, 0.0, 0.0],   # sports
    [0.8, 0.0, 0.0, 0.6],   # game: cos 0.8 to sports
    [0.0, 1.0, 0.0, 0.0],   # business
    [0.0, 0.8, 0.0, 0.6],   # market: cos 0.8 to business
    [0.0, 0.0, 1.0, 0.0],   # river
    [0.0, 0.0, 0.8, 0.6],   # lake: cos 0.8 to river
    [0.0, 0.6, 0.8, 0.0],   # mountain: cos 0.8 to river
    [0.6, 0.0, 0.0, 0.8],   # music: cos 0.6 to sports (enters at k=3)
]

MICRO_CLASSES = [
    ("Sports", ["sports"]),
    ("Business", ["business"]),
    ("NaturalPlace", ["river", "lake", "mountain"]),
]

MICRO_TEMPLATE = "A {mask} report : {text} ."

# One masked-position logit row per example; ex4's mass sits on " music".
MICRO_EXAMPLES = [
    ("ex1", "The team won the final match", 0,
     [-1.0, 0.5, 5.0, 1.0, 0.3, 0.2, 0.1, 0.0, 0.1, 0.4]),
    ("ex2", "Shares slid after the earnings call", 1,
     [0.0, -0.5, 0.4, 0.2, 3.0, 4.0, 0.1, 0.2, 0.3, 0.1]),
    ("ex3", "The gorge cuts through the valley", 2,
     [0.2, 0.0, 0.1, 0.3, 0.2, 0.1, 4.5, 1.5, 1.2, 0.0]),
    ("ex4", "Fans cheered the open-air music festival", 0,
     [0.1, 0.2, 0.2, 0.1, 0.0, 0.1, 0.1, 0.0, 1.0, 6.0]),
    ("ex5", "The merger was approved by the board", 1,
     [0.3, 0.1, 0.5, 0.2, 4.0, 1.0, 0.0, 0.1, 0.2, 0.3]),
    ("ex6", "Snow melt feeds the alpine tarn", 2,
     [0.0, 0.0, 0.3, 0.2, 0.6, 0.4, 1.0, 3.5, 3.4, 0.2]),
]

MICRO_GOLD = [label for _, _, label, _ in MICRO_EXAMPLES]


@pytest.fixture
def micro_vocab() -> Vocabulary:
    return Vocabulary.from_entries(VocabEntry(i, t, s) for i, t, s in MICRO_VOCAB)


@pytest.fixture
def micro_emb() -> np.ndarray:
    return np.array(MICRO_EMBEDDINGS, dtype=np.float64)


@pytest.fixture
def micro_specs() -> tuple:
    return tuple(LabelSpec(name, tuple(kws)) for name, kws in MICRO_CLASSES)


@pytest.fixture
def micro_logits() -> np.ndarray:
    return np.array([row for _, _, _, row in MICRO_EXAMPLES], dtype=np.float64)


@pytest.fixture
def micro_batch(micro_logits) -> LogitsBatch:
    matrix = np.asarray(micro_logits, dtype=np.float32)
    rows = {ex_id: i for i, (ex_id, _, _, _) in enumerate(MICRO_EXAMPLES)}
    return LogitsBatch(matrix, rows)


@pytest.fixture
def micro_records(tmp_path):
    path = tmp_path / "micro.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for ex_id, text, label, _ in MICRO_EXAMPLES:
            fh.write(json.dumps({"id": ex_id, "text": text, "label": label}) + "\n")
    return read_dataset(path)


@pytest.fixture
def micro_pipeline(micro_vocab, micro_emb, micro_specs, micro_batch):
    return Pipeline(
        vocabulary=micro_vocab,
        embeddings=micro_emb,
        label_specs=micro_specs,
        template=parse_template(MICRO_TEMPLATE),
        backend=FileBackend(micro_batch, len(micro_vocab)),
        k=2,
    )


@pytest.fixture
def choice_pipeline(micro_vocab, micro_emb, micro_specs):
    """Pipeline whose batch holds rows for multiple-choice questions q1/q2."""
    matrix = np.array([
        [0.0, 0.0, 0.1, 0.0, 0.5, 0.2, 5.0, 1.0, 0.8, 0.3],  # q1: " river" peaks
        [0.0, 0.0, 0.0, 0.0, 0.4, 3.0, 0.1, 0.5, 0.0, 0.0],  # q2: " market" peaks
    ], dtype=np.float32)
    batch = LogitsBatch(matrix, {"q1": 0, "q2": 1})
    return Pipeline(
        vocabulary=micro_vocab,
        embeddings=micro_emb,
        label_specs=micro_specs,
        template=parse_template(MICRO_TEMPLATE),
        backend=FileBackend(batch, len(micro_vocab)),
        k=2,
    )


def write_micro_workspace(root, k=2, extra_config=None):
    """Materialize the micro corpus as real artifact files plus a run config.

    Returns a dict of paths. `extra_config` entries override the defaults.
    """
    root.mkdir(parents=True, exist_ok=True)
    vocab_path = root / "micro.vocab.jsonl"
    write_vocab(vocab_path, MICRO_VOCAB)
    emb_path = root / "embeddings.npt"
    write_tensor(emb_path, np.array(MICRO_EMBEDDINGS, dtype=np.float32))
    logits_path = root / "logits.npt"
    write_tensor(
        logits_path, np.array([row for _, _, _, row in MICRO_EXAMPLES], dtype=np.float32)
    )
    manifest_path = root / "logits.manifest.jsonl"
    write_manifest(manifest_path, [ex_id for ex_id, _, _, _ in MICRO_EXAMPLES])
    dataset_path = root / "dataset.jsonl"
    with open(dataset_path, "w", encoding="utf-8") as fh:
        for ex_id, text, label, _ in MICRO_EXAMPLES:
            fh.write(json.dumps({"id": ex_id, "text": text, "label": label}) + "\n")
    config = {
        "vocab": vocab_path.name,
        "embeddings": emb_path.name,
        "logits": logits_path.name,
        "manifest": manifest_path.name,
        "dataset": dataset_path.name,
        "template": MICRO_TEMPLATE,
        "classes": [{"name": n, "keywords": kws} for n, kws in MICRO_CLASSES],
        "k": k,
    }
    if extra_config:
        config.update(extra_config)
    config_path = root / "run.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
    return {
        "root": root,
        "vocab": vocab_path,
        "embeddings": emb_path,
        "logits": logits_path,
        "manifest": manifest_path,
        "dataset": dataset_path,
        "config": config_path,
    }


@pytest.fixture
def micro_workspace(tmp_path):
    return write_micro_workspace(tmp_path / "ws")
