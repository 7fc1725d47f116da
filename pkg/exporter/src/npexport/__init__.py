"""Exporter sidecar: run a pretrained model once, keep the artifacts forever.

Dumps the four things the zero-shot classification engine consumes:
vocabulary, input embedding table, per-example mask logits, and per-token
contextual states for whitening. Shares file formats with the engine, not
code.
"""

from .datasets import Example, read_examples
from .errors import DataError, ExportError, ModelError, UsageError
from .export import export_contextual, export_embeddings, export_logits, export_vocab
from .formats import (
    sha256_file,
    write_export_manifest,
    write_row_manifest,
    write_tensor,
    write_vocab,
)
from .modeling import ModelBundle, load_bundle
from .templates import Slot, Template, parse_template, render, render_prefix

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Example",
    "ExportError",
    "ModelBundle",
    "ModelError",
    "Slot",
    "Template",
    "UsageError",
    "__version__",
    "export_contextual",
    "export_embeddings",
    "export_logits",
    "export_vocab",
    "load_bundle",
    "parse_template",
    "read_examples",
    "render",
    "render_prefix",
    "sha256_file",
    "write_export_manifest",
    "write_row_manifest",
    "write_tensor",
    "write_vocab",
]
