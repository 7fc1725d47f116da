"""Error hierarchy for the exporter CLI.

Every error carries an exit_code so the CLI can translate failures into
distinct process statuses: 1 usage/arguments, 2 data (datasets, templates,
render failures), 3 model loading/inference.
"""

from __future__ import annotations


class ExportError(Exception):
    """Base class for all exporter failures."""

    exit_code = 1


class UsageError(ExportError):
    """Bad arguments or an argument combination the export kind rejects."""

    exit_code = 1


class DataError(ExportError):
    """Malformed dataset or template, or a record that cannot be rendered."""

    exit_code = 2


class ModelError(ExportError):
    """Model or tokenizer cannot be loaded, or inference-time misuse."""

    exit_code = 3
