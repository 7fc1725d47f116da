"""Build a verbalizer from keywords alone and inspect its neighbor tables.

A tiny 4-dimensional embedding space stands in for a real model's input
embedding table. Each class keyword pulls in its top-k nearest vocabulary
tokens; softmax over the similarities gives the aggregation weights.

Run: python3 demos/02_neighbors.py
"""

import numpy as np

from npprompt import (
    LabelSpec,
    SimilarityMetric,
    VocabEntry,
    Vocabulary,
    build_verbalizer,
    embed_label,
    topk_neighbors,
)

vocab = Vocabulary.from_entries([
    VocabEntry(0, "<s>", True),        # special: never a neighbor
    VocabEntry(1, "<mask>", True),
    VocabEntry(2, " sports", False),
    VocabEntry(3, " game", False),
    VocabEntry(4, " business", False),
    VocabEntry(5, " market", False),
    VocabEntry(6, " river", False),
    VocabEntry(7, " lake", False),
    VocabEntry(8, " mountain", False),
    VocabEntry(9, " music", False),
])

embeddings = np.array([
    [0.5, 0.5, 0.5, 0.5],
    [-1.0, 0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.8, 0.0, 0.0, 0.6],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.8, 0.0, 0.6],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.8, 0.6],
    [0.0, 0.6, 0.8, 0.0],
    [0.6, 0.0, 0.0, 0.8],
])

# raw neighbor table for one keyword, the way `npprompt neighbors` prints it
print("top-4 neighbors of keyword 'sports' (cosine):")
label_vec = embed_label("sports", vocab, embeddings)
for rank, (token_id, sim) in enumerate(
    topk_neighbors(label_vec, embeddings, 4, SimilarityMetric.COSINE, vocab), start=1
):
    print(f'  {rank}  {sim:5.2f}  "{vocab.tokens[token_id]}"')
print()

# a full verbalizer: one neighbor list per keyword per class
specs = (
    LabelSpec("Sports", ("sports",)),
    LabelSpec("Business", ("business",)),
    LabelSpec("NaturalPlace", ("river", "lake", "mountain")),
)
verbalizer = build_verbalizer(specs, vocab, embeddings, k=2)
for cls in verbalizer.classes:
    print(f"class {cls.class_name}:")
    for entry in cls.entries:
        pairs = ", ".join(
            f'"{tok}" (w={w:.3f})' for tok, w in zip(entry.tokens, entry.weights)
        )
        print(f"  {entry.keyword:>9} -> {pairs}")
