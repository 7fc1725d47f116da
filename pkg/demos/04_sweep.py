"""Sweep the neighborhood size k and watch the accuracy curve.

Logits are scored once; only the verbalizer is rebuilt per k. On the demo
corpus the curve jumps to 6/6 at k=3, where ' music' (cosine 0.6 to
' sports') finally joins the Sports neighbor list and captures the music
festival example.

Run: python3 demos/04_sweep.py
"""

import numpy as np

from npprompt import (
    FileBackend,
    LabelSpec,
    LogitsBatch,
    Pipeline,
    VocabEntry,
    Vocabulary,
    parse_template,
    sweep_k,
)
from npprompt.tensorio import DatasetRecord

vocab = Vocabulary.from_entries([
    VocabEntry(0, "<s>", True), VocabEntry(1, "<mask>", True),
    VocabEntry(2, " sports", False), VocabEntry(3, " game", False),
    VocabEntry(4, " business", False), VocabEntry(5, " market", False),
    VocabEntry(6, " river", False), VocabEntry(7, " lake", False),
    VocabEntry(8, " mountain", False), VocabEntry(9, " music", False),
])
embeddings = np.array([
    [0.5, 0.5, 0.5, 0.5], [-1.0, 0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0], [0.8, 0.0, 0.0, 0.6],
    [0.0, 1.0, 0.0, 0.0], [0.0, 0.8, 0.0, 0.6],
    [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.8, 0.6],
    [0.0, 0.6, 0.8, 0.0], [0.6, 0.0, 0.0, 0.8],
])
examples = [
    ("ex1", "The team won the final match", 0),
    ("ex2", "Shares slid after the earnings call", 1),
    ("ex3", "The gorge cuts through the valley", 2),
    ("ex4", "Fans cheered the open-air music festival", 0),
    ("ex5", "The merger was approved by the board", 1),
    ("ex6", "Snow melt feeds the alpine tarn", 2),
]
logits = np.array([
    [-1.0, 0.5, 5.0, 1.0, 0.3, 0.2, 0.1, 0.0, 0.1, 0.4],
    [0.0, -0.5, 0.4, 0.2, 3.0, 4.0, 0.1, 0.2, 0.3, 0.1],
    [0.2, 0.0, 0.1, 0.3, 0.2, 0.1, 4.5, 1.5, 1.2, 0.0],
    [0.1, 0.2, 0.2, 0.1, 0.0, 0.1, 0.1, 0.0, 1.0, 6.0],
    [0.3, 0.1, 0.5, 0.2, 4.0, 1.0, 0.0, 0.1, 0.2, 0.3],
    [0.0, 0.0, 0.3, 0.2, 0.6, 0.4, 1.0, 3.5, 3.4, 0.2],
], dtype=np.float32)

records = [DatasetRecord(ex_id, text=text, label=label) for ex_id, text, label in examples]
pipeline = Pipeline(
    vocabulary=vocab,
    embeddings=embeddings,
    label_specs=(
        LabelSpec("Sports", ("sports",)),
        LabelSpec("Business", ("business",)),
        LabelSpec("NaturalPlace", ("river", "lake", "mountain")),
    ),
    template=parse_template("A {mask} report : {text} ."),
    backend=FileBackend(
        LogitsBatch(logits, {ex_id: i for i, (ex_id, _, _) in enumerate(examples)}),
        len(vocab),
    ),
    k=2,
)

print(" k  accuracy")
for k, value in sweep_k(records, pipeline, range(1, 9)):
    bar = "#" * round(value * 24)
    print(f"{k:>2}  {value:.4f}  {bar}")
