"""Scoring backends: where the masked-position logit vector comes from.

The file backend is the reference path: an exporter sidecar has already
run the model over the whole dataset, so scoring is a pure lookup into a
logits batch and the engine needs no model at all. The HTTP backend posts
the prompted text to a service that runs the model live.

Both backends validate the returned vector length against the engine's
vocabulary and are safe to call from several worker threads.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import BackendError, DataError
from .prompting import MASK_MARKER
from .tensorio import LogitsBatch


@dataclass(frozen=True)
class ScoreRequest:
    example_id: str
    prompted_text: str
    mask_char_offset: int

    def __post_init__(self):
        end = self.mask_char_offset + len(MASK_MARKER)
        if self.prompted_text[self.mask_char_offset:end] != MASK_MARKER:
            raise DataError(
                f"request {self.example_id!r}: no {MASK_MARKER} at offset {self.mask_char_offset}"
            )


class FileBackend:
    """Pure lookup into a pre-exported logits batch; bit-exact and repeatable."""

    def __init__(self, batch: LogitsBatch, vocab_size: int):
        if batch.vocab_size != vocab_size:
            raise DataError(
                f"logits batch width {batch.vocab_size} != vocabulary size {vocab_size}"
            )
        self._batch = batch
        self.vocab_size = vocab_size

    def score(self, request: ScoreRequest) -> np.ndarray:
        return self._batch.lookup(request.example_id)


class HTTPBackend:
    """POSTs {"example_id", "prompted_text"} to <base_url>/v1/score and expects
    {"logits": [...]} of exactly vocabulary size.

    At most `max_in_flight` requests run concurrently; each request gets
    `timeout` seconds and `retries` extra attempts (scores are deterministic,
    so retries default to 0 and only help against flaky transport).
    """

    def __init__(
        self,
        base_url: str,
        vocab_size: int,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        retries: int = 0,
    ):
        import requests

        self.base_url = base_url.rstrip("/")
        self.vocab_size = vocab_size
        self.timeout = timeout
        self.retries = retries
        self._semaphore = threading.Semaphore(max_in_flight)
        self._session = requests.Session()

    def score(self, request: ScoreRequest) -> np.ndarray:
        import requests

        body = {"example_id": request.example_id, "prompted_text": request.prompted_text}
        url = self.base_url + "/v1/score"
        last_exc = None
        for _ in range(self.retries + 1):
            try:
                with self._semaphore:
                    response = self._session.post(url, json=body, timeout=self.timeout)
                break
            except requests.RequestException as exc:
                last_exc = exc
        else:
            raise BackendError(
                f"example {request.example_id!r}: transport failure talking to {url}: {last_exc}"
            ) from last_exc
        if response.status_code != 200:
            raise BackendError(
                f"example {request.example_id!r}: backend returned status {response.status_code}"
            )
        try:
            payload = response.json()
            logits = payload["logits"]
            vec = np.asarray(logits, dtype=np.float64)
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(
                f"example {request.example_id!r}: malformed backend response ({exc})"
            ) from exc
        if vec.ndim != 1 or vec.shape[0] != self.vocab_size:
            raise BackendError(
                f"example {request.example_id!r}: backend returned length "
                f"{vec.shape[0] if vec.ndim == 1 else '?'}, expected {self.vocab_size}"
            )
        if not np.all(np.isfinite(vec)):
            raise BackendError(
                f"example {request.example_id!r}: backend returned non-finite logits"
            )
        return vec
