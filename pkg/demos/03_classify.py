"""Classify a six-example corpus end to end without any labeled data.

The logits here are hand-built stand-ins for what a masked language model
would emit at the prediction slot; in a real run they come from the
exporter sidecar (file backend) or a scoring service (HTTP backend).

Run: python3 demos/03_classify.py
"""

import numpy as np

from npprompt import (
    FileBackend,
    LabelSpec,
    LogitsBatch,
    Pipeline,
    VocabEntry,
    Vocabulary,
    evaluate,
    parse_template,
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
batch = LogitsBatch(logits, {ex_id: i for i, (ex_id, _, _) in enumerate(examples)})

pipeline = Pipeline(
    vocabulary=vocab,
    embeddings=embeddings,
    label_specs=(
        LabelSpec("Sports", ("sports",)),
        LabelSpec("Business", ("business",)),
        LabelSpec("NaturalPlace", ("river", "lake", "mountain")),
    ),
    template=parse_template("A {mask} report : {text} ."),
    backend=FileBackend(batch, len(vocab)),
    k=2,
)

report, results = evaluate(records, pipeline)
names = [spec.class_name for spec in pipeline.label_specs]
print(f"accuracy at k=2: {report.metric_value:.4f}\n")
for record, result in zip(records, results):
    verdict = "ok " if result.predicted_class == record.label else "MISS"
    print(f"{verdict} {record.id}  gold={names[record.label]:>12}  "
          f"pred={names[result.predicted_class]:>12}  via '{result.winning_keyword}'")
print()
print("ex4 is about a music festival: at k=2 no Sports neighbor covers")
print("' music', so it lands on NaturalPlace. demos/04_sweep.py shows how")
print("a larger neighborhood fixes exactly this example.")
