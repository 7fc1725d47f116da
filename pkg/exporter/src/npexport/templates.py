"""Minimal prompt-template grammar, kept byte-compatible with the engine.

Placeholders are {text}, {text_a}, {text_b} and {mask}; exactly one {mask};
{text} is exclusive with the pair slots. Payload strings are substituted
literally and never re-scanned for placeholders. Unlike the engine, which
always emits the neutral "[MASK]" marker, the exporter renders the mask
slot as the concrete string the loaded tokenizer expects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import DataError

_PLACEHOLDER = re.compile(r"\{([a-zA-Z_]*)\}")

_SLOT_NAMES = {"text", "text_a", "text_b", "mask"}


class Slot(Enum):
    TEXT = "text"
    TEXT_A = "text_a"
    TEXT_B = "text_b"
    MASK = "mask"


@dataclass(frozen=True)
class Template:
    source: str
    segments: tuple[str | Slot, ...]

    @property
    def is_pair(self) -> bool:
        return Slot.TEXT_A in self.segments

    @property
    def text_slots(self) -> tuple[str, ...]:
        """Distinct text slot names in first-appearance order."""
        seen: list[str] = []
        for seg in self.segments:
            if isinstance(seg, Slot) and seg is not Slot.MASK and seg.value not in seen:
                seen.append(seg.value)
        return tuple(seen)


def parse_template(source: str) -> Template:
    segments: list[str | Slot] = []
    pos = 0
    for match in _PLACEHOLDER.finditer(source):
        name = match.group(1)
        if name not in _SLOT_NAMES:
            raise DataError(f"unknown placeholder {{{name}}} in template {source!r}")
        if match.start() > pos:
            segments.append(source[pos:match.start()])
        segments.append(Slot(name))
        pos = match.end()
    if pos < len(source):
        segments.append(source[pos:])

    masks = sum(1 for s in segments if s is Slot.MASK)
    if masks != 1:
        raise DataError(f"template must have exactly one {{mask}} slot, got {masks}")
    has_text = Slot.TEXT in segments
    has_a = Slot.TEXT_A in segments
    has_b = Slot.TEXT_B in segments
    if has_text and (has_a or has_b):
        raise DataError("template mixes {text} with {text_a}/{text_b}")
    if not has_text and not (has_a and has_b):
        raise DataError("template must use {text}, or both {text_a} and {text_b}")
    return Template(source, tuple(segments))


def render(template: Template, payloads: dict[str, str], mask_text: str) -> str:
    """Substitute payloads, emitting *mask_text* at the prediction slot."""
    parts: list[str] = []
    for seg in template.segments:
        if seg is Slot.MASK:
            parts.append(mask_text)
        elif isinstance(seg, Slot):
            parts.append(payloads[seg.value])
        else:
            parts.append(seg)
    return "".join(parts)


def render_prefix(template: Template, payloads: dict[str, str]) -> str:
    """Everything before the mask slot; the prompt for next-token scoring."""
    parts: list[str] = []
    for seg in template.segments:
        if seg is Slot.MASK:
            break
        if isinstance(seg, Slot):
            parts.append(payloads[seg.value])
        else:
            parts.append(seg)
    return "".join(parts)
