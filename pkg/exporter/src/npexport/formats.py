"""Writers for the portable artifact files the classification engine reads.

The exporter deliberately shares no code with the engine; these writers are
an independent implementation of the same documented formats, so the two
packages stay coupled through bytes on disk only.

Tensor file layout (extension .npt):

    bytes 0..3   magic b"NPPT"
    bytes 4..7   u32 little-endian version (currently 1)
    bytes 8..11  u32 little-endian header length H
    bytes 12..   H bytes of UTF-8 JSON: {"dtype": "f32", "shape": [...]}
    then         row-major little-endian f32 payload

Vocabularies and row manifests are JSON Lines; the export manifest is a
single JSON object with a files table of sha256 checksums, paths relative
to the manifest's own directory.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from .errors import DataError

MAGIC = b"NPPT"
VERSION = 1

_PRELUDE = struct.Struct("<4sII")  # magic, version, header length


def write_tensor(path, matrix) -> None:
    """Write a rank-1 or rank-2 float matrix to *path* as little-endian f32."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise DataError(f"tensor rank must be 1 or 2, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DataError("tensor contains non-finite values")
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    header = json.dumps({"dtype": "f32", "shape": list(arr.shape)}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PRELUDE.pack(MAGIC, VERSION, len(header)))
        fh.write(header)
        fh.write(payload)


def write_vocab(path, entries) -> None:
    """Write (id, token, special) triples as one JSON object per line.

    Ids must already be dense 0..n-1 in file order; token strings are
    stored verbatim (leading spaces and control characters survive via
    JSON escaping).
    """
    with open(path, "w", encoding="utf-8") as fh:
        for i, (token_id, token, special) in enumerate(entries):
            if token_id != i:
                raise DataError(f"vocab ids must be dense 0..n-1, got {token_id} at line {i + 1}")
            fh.write(json.dumps(
                {"id": token_id, "token": token, "special": bool(special)},
                ensure_ascii=False,
            ))
            fh.write("\n")


def write_row_manifest(path, example_ids) -> None:
    """Write the row-index -> example-id mapping for a logits batch."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, example_id in enumerate(example_ids):
            fh.write(json.dumps({"row": row, "example_id": example_id}, ensure_ascii=False))
            fh.write("\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_export_manifest(path, model_id, kind, file_paths, extra=None) -> None:
    """Record what was exported and a sha256 per emitted file.

    *file_paths* must live in the manifest's directory; the files table is
    keyed by basename so the whole directory can be moved as a unit.
    """
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    files = {}
    for fp in file_paths:
        fp = os.path.abspath(os.fspath(fp))
        if os.path.dirname(fp) != base:
            raise DataError(f"manifest can only checksum siblings, got {fp}")
        files[os.path.basename(fp)] = {"sha256": sha256_file(fp)}
    manifest = {"model": model_id, "kind": kind, "files": files}
    manifest.update(extra or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
