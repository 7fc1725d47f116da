"""Readers/writers for the portable tensor, vocabulary, logits-batch and
dataset files shared between the engine and the exporter sidecar.

Tensor file layout (extension .npt):

    bytes 0..3   magic b"NPPT"
    bytes 4..7   u32 little-endian version (currently 1)
    bytes 8..11  u32 little-endian header length H
    bytes 12..   H bytes of UTF-8 JSON: {"dtype": "f32", "shape": [...]}
    then         row-major little-endian f32 payload

Payload length must equal 4 * product(shape); rank is 1 or 2. Values are
stored f32; everything downstream accumulates in float64.

Vocabulary, manifests and datasets are JSON Lines. Loaded structures are
immutable and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    DatasetError,
    HeaderError,
    LengthMismatchError,
    LogitsBatchError,
    MissingExampleError,
    TruncatedFileError,
    VersionMismatchError,
    VocabError,
)

MAGIC = b"NPPT"
VERSION = 1

_PRELUDE = struct.Struct("<4sII")  # magic, version, header length


def write_tensor(path, matrix) -> None:
    """Write a rank-1 or rank-2 float matrix to *path* in the NPPT format.

    Values must be finite; they are stored as little-endian f32.
    """
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise HeaderError(f"tensor rank must be 1 or 2, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise HeaderError("tensor contains non-finite values")
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    header = json.dumps({"dtype": "f32", "shape": list(arr.shape)}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PRELUDE.pack(MAGIC, VERSION, len(header)))
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> np.ndarray:
    """Read an NPPT tensor file back as a float32 array.

    Raises BadMagicError, VersionMismatchError, TruncatedFileError,
    HeaderError or LengthMismatchError depending on which part of the
    format contract is violated.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _PRELUDE.size:
        raise TruncatedFileError(f"{path}: file shorter than the fixed prelude")
    magic, version, header_len = _PRELUDE.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: unsupported version {version}")
    header_end = _PRELUDE.size + header_len
    if len(blob) < header_end:
        raise TruncatedFileError(f"{path}: declared header extends past end of file")
    try:
        header = json.loads(blob[_PRELUDE.size:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"{path}: header is not valid JSON ({exc})") from exc
    if not isinstance(header, dict) or "dtype" not in header or "shape" not in header:
        raise HeaderError(f"{path}: header must carry dtype and shape")
    if header["dtype"] != "f32":
        raise HeaderError(f"{path}: unsupported dtype {header['dtype']!r}")
    shape = header["shape"]
    if (
        not isinstance(shape, list)
        or not shape
        or len(shape) > 2
        or any(not isinstance(s, int) or s < 0 for s in shape)
    ):
        raise HeaderError(f"{path}: invalid shape {shape!r}")
    expected = 4 * int(np.prod(shape, dtype=np.int64))
    payload = blob[header_end:]
    if len(payload) != expected:
        raise LengthMismatchError(
            f"{path}: shape {shape} needs {expected} payload bytes, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()


# --- vocabulary ----------------------------------------------------------------

@dataclass(frozen=True)
class VocabEntry:
    id: int
    token: str
    special: bool


@dataclass(frozen=True)
class Vocabulary:
    """Dense id<->token table. Index i of `tokens`/`special` is token id i."""

    entries: tuple[VocabEntry, ...]
    tokens: tuple[str, ...] = field(repr=False)
    special: np.ndarray = field(repr=False)  # bool, indexed by id
    token_ids: dict[str, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> int | None:
        return self.token_ids.get(token)

    def eligible_ids(self) -> np.ndarray:
        """Token ids that may appear as verbalizer neighbors (non-special)."""
        return np.flatnonzero(~self.special)

    @classmethod
    def from_entries(cls, entries) -> "Vocabulary":
        """Build from VocabEntry objects with dense ids 0..n-1 (any order)."""
        entries = tuple(entries)
        if not entries:
            raise VocabError("empty vocabulary")
        n = len(entries)
        if sorted(e.id for e in entries) != list(range(n)):
            raise VocabError("vocabulary ids are not dense 0..n-1")
        tokens = [""] * n
        special = np.zeros(n, dtype=bool)
        token_ids: dict[str, int] = {}
        for e in entries:
            tokens[e.id] = e.token
            special[e.id] = e.special
            token_ids[e.token] = e.id
        if special.all():
            raise VocabError("vocabulary has no non-special entry")
        special.setflags(write=False)
        return cls(entries, tuple(tokens), special, token_ids)


def read_vocab(path) -> Vocabulary:
    """Load a .vocab.jsonl file: one {"id", "token", "special"} object per line.

    Ids must be unique and dense 0..n-1; tokens are kept verbatim (leading
    whitespace matters). File order is preserved in `entries`.
    """
    entries: list[VocabEntry] = []
    seen: set[int] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip("\n")
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                ident = obj["id"]
                token = obj["token"]
                spec = obj["special"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise VocabError(f"{path}:{lineno}: malformed vocab line ({exc})") from exc
            if not isinstance(ident, int) or not isinstance(token, str) or not isinstance(spec, bool):
                raise VocabError(f"{path}:{lineno}: id/token/special have wrong types")
            if ident in seen:
                raise VocabError(f"{path}:{lineno}: duplicate id {ident}")
            seen.add(ident)
            entries.append(VocabEntry(ident, token, spec))
    try:
        return Vocabulary.from_entries(entries)
    except VocabError as exc:
        raise VocabError(f"{path}: {exc}") from exc


def write_vocab(path, entries) -> None:
    """Write (id, token, special) triples as .vocab.jsonl, in the given order."""
    with open(path, "w", encoding="utf-8") as fh:
        for ident, token, spec in entries:
            fh.write(json.dumps({"id": ident, "token": token, "special": spec}) + "\n")


# --- logits batch ---------------------------------------------------------------

@dataclass(frozen=True)
class LogitsBatch:
    """Per-example masked-position logit rows, keyed by example id."""

    matrix: np.ndarray  # [n, vocab_size] float32, read-only
    rows: dict[str, int]

    @property
    def vocab_size(self) -> int:
        return self.matrix.shape[1]

    def __contains__(self, example_id: str) -> bool:
        return example_id in self.rows

    def lookup(self, example_id: str) -> np.ndarray:
        try:
            return self.matrix[self.rows[example_id]]
        except KeyError:
            raise MissingExampleError(
                f"example id {example_id!r} not present in logits batch"
            ) from None


def read_logits_batch(tensor_path, manifest_path, vocab_size: int | None = None) -> LogitsBatch:
    """Load a [n, |V|] logits tensor plus its row->example-id manifest.

    The manifest is JSON Lines, one {"row", "example_id"} object per line.
    When *vocab_size* is given the tensor width must match it. Non-finite
    logits are rejected here rather than propagated downstream.
    """
    matrix = read_tensor(tensor_path)
    if matrix.ndim != 2:
        raise LogitsBatchError(f"{tensor_path}: logits tensor must be rank 2")
    if not np.all(np.isfinite(matrix)):
        raise LogitsBatchError(f"{tensor_path}: logits contain NaN or Inf")
    if vocab_size is not None and matrix.shape[1] != vocab_size:
        raise LogitsBatchError(
            f"{tensor_path}: logits width {matrix.shape[1]} != vocabulary size {vocab_size}"
        )
    rows: dict[str, int] = {}
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                row = obj["row"]
                example_id = obj["example_id"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise LogitsBatchError(
                    f"{manifest_path}:{lineno}: malformed manifest line ({exc})"
                ) from exc
            if not isinstance(row, int) or not isinstance(example_id, str):
                raise LogitsBatchError(f"{manifest_path}:{lineno}: row/example_id wrong types")
            if example_id in rows:
                raise LogitsBatchError(
                    f"{manifest_path}:{lineno}: duplicate example id {example_id!r}"
                )
            if not 0 <= row < matrix.shape[0]:
                raise LogitsBatchError(
                    f"{manifest_path}:{lineno}: row {row} outside tensor of {matrix.shape[0]} rows"
                )
            rows[example_id] = row
    if len(rows) != matrix.shape[0]:
        raise LogitsBatchError(
            f"{manifest_path}: {len(rows)} manifest lines for {matrix.shape[0]} tensor rows"
        )
    matrix.setflags(write=False)
    return LogitsBatch(matrix, rows)


def write_manifest(path, example_ids) -> None:
    """Write the row->example-id manifest matching a logits tensor's row order."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, example_id in enumerate(example_ids):
            fh.write(json.dumps({"row": row, "example_id": example_id}) + "\n")


# --- datasets -------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetRecord:
    """One classification example: single sentence or sentence pair."""

    id: str
    text: str | None = None
    text_a: str | None = None
    text_b: str | None = None
    label: int | None = None
    choices: tuple[str, ...] | None = None

    @property
    def is_pair(self) -> bool:
        return self.text is None


def read_dataset(path) -> list[DatasetRecord]:
    """Load a .jsonl dataset. Each record carries exactly one of
    {"text"} or {"text_a","text_b"}, plus optional "label" and "choices".
    """
    records: list[DatasetRecord] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
                raise DatasetError(f"{path}:{lineno}: record needs a string id")
            if obj["id"] in seen_ids:
                raise DatasetError(f"{path}:{lineno}: duplicate example id {obj['id']!r}")
            seen_ids.add(obj["id"])
            text = obj.get("text")
            text_a = obj.get("text_a")
            text_b = obj.get("text_b")
            single = text is not None
            pair = text_a is not None or text_b is not None
            if single == pair:
                raise DatasetError(
                    f"{path}:{lineno}: exactly one of text or (text_a, text_b) must be present"
                )
            if pair and (text_a is None or text_b is None):
                raise DatasetError(f"{path}:{lineno}: sentence pair needs both text_a and text_b")
            label = obj.get("label")
            if label is not None and (not isinstance(label, int) or label < 0):
                raise DatasetError(f"{path}:{lineno}: label must be a non-negative integer")
            choices = obj.get("choices")
            if choices is not None:
                if (
                    not isinstance(choices, list)
                    or not choices
                    or any(not isinstance(c, str) or not c for c in choices)
                ):
                    raise DatasetError(f"{path}:{lineno}: choices must be non-empty strings")
                if label is not None and label >= len(choices):
                    raise DatasetError(
                        f"{path}:{lineno}: label {label} outside {len(choices)} choices"
                    )
                choices = tuple(choices)
            records.append(DatasetRecord(obj["id"], text, text_a, text_b, label, choices))
    return records


# --- checksums ------------------------------------------------------------------

def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_export_manifest(manifest_path) -> None:
    """Verify the checksums recorded by the exporter sidecar.

    The manifest is JSON: {"files": {relative_name: {"sha256": ...}, ...}}.
    Raises DataError on any mismatch or missing file.
    """
    import os

    from .errors import DataError

    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.fspath(manifest_path))
    files = manifest.get("files", {})
    if not isinstance(files, dict):
        raise DataError(f"{manifest_path}: malformed files table")
    for name, info in files.items():
        target = os.path.join(base, name)
        if not os.path.exists(target):
            raise DataError(f"{manifest_path}: checksummed file {name} is missing")
        actual = sha256_file(target)
        if actual != info.get("sha256"):
            raise DataError(
                f"{manifest_path}: checksum mismatch for {name}: "
                f"expected {info.get('sha256')}, got {actual}"
            )
