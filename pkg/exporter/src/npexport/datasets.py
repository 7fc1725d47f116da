"""Dataset reader for the logits export.

Same JSON Lines shape the engine consumes: one object per line with "id"
and either "text" or both "text_a" and "text_b". Gold labels and choice
lists may be present; the exporter does not look at them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DataError


@dataclass(frozen=True)
class Example:
    id: str
    payloads: dict[str, str]  # keys are the template slot names present

    @property
    def is_pair(self) -> bool:
        return "text_a" in self.payloads


def read_examples(path) -> list[Example]:
    examples: list[Example] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON ({exc})") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), str) or not obj["id"]:
                raise DataError(f"{path}:{lineno}: record needs a non-empty string id")
            example_id = obj["id"]
            if example_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate example id {example_id!r}")
            seen.add(example_id)
            has_text = "text" in obj
            has_pair = "text_a" in obj or "text_b" in obj
            if has_text == has_pair:
                raise DataError(
                    f"{path}:{lineno}: record {example_id!r} must carry text "
                    "or text_a+text_b, not both or neither"
                )
            if has_text:
                if not isinstance(obj["text"], str):
                    raise DataError(f"{path}:{lineno}: text must be a string")
                payloads = {"text": obj["text"]}
            else:
                if not isinstance(obj.get("text_a"), str) or not isinstance(obj.get("text_b"), str):
                    raise DataError(f"{path}:{lineno}: text_a and text_b must both be strings")
                payloads = {"text_a": obj["text_a"], "text_b": obj["text_b"]}
            examples.append(Example(example_id, payloads))
    return examples
