"""Prompt templates: parse config strings like "A {mask} news : {text} ."
and render dataset records into prompted texts with one prediction slot.

The engine is model-agnostic: the prediction slot is always emitted as the
literal marker "[MASK]"; whatever runs the model translates that marker to
its own mask token (or positions generation there).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import RenderError, TemplateError
from .tensorio import DatasetRecord

MASK_MARKER = "[MASK]"

_PLACEHOLDER = re.compile(r"\{([a-zA-Z_]*)\}")

_SLOT_NAMES = {"text", "text_a", "text_b", "mask"}


class Slot(Enum):
    TEXT = "text"
    TEXT_A = "text_a"
    TEXT_B = "text_b"
    MASK = "mask"


@dataclass(frozen=True)
class Template:
    """Parsed template: literal strings interleaved with slots.

    segments holds str (literal, byte-exact) and Slot values. Exactly one
    MASK slot; TEXT is present xor (TEXT_A and TEXT_B) are; text slots may
    repeat (DBPedia's template mentions its subject twice).
    """

    source: str
    segments: tuple[str | Slot, ...]

    @property
    def is_pair(self) -> bool:
        return Slot.TEXT_A in self.segments


def parse_template(source: str) -> Template:
    """Parse a template string using {text}, {text_a}, {text_b}, {mask}."""
    segments: list[str | Slot] = []
    pos = 0
    for match in _PLACEHOLDER.finditer(source):
        name = match.group(1)
        if name not in _SLOT_NAMES:
            raise TemplateError(f"unknown placeholder {{{name}}} in template {source!r}")
        if match.start() > pos:
            segments.append(source[pos:match.start()])
        segments.append(Slot(name))
        pos = match.end()
    if pos < len(source):
        segments.append(source[pos:])

    masks = sum(1 for s in segments if s is Slot.MASK)
    if masks == 0:
        raise TemplateError(f"template has no {{mask}} slot: {source!r}")
    if masks > 1:
        raise TemplateError(f"template has {masks} {{mask}} slots, expected exactly one")
    has_text = Slot.TEXT in segments
    has_a = Slot.TEXT_A in segments
    has_b = Slot.TEXT_B in segments
    if has_text and (has_a or has_b):
        raise TemplateError("template mixes {text} with {text_a}/{text_b}")
    if not has_text and not (has_a and has_b):
        raise TemplateError(
            "template must use {text}, or both {text_a} and {text_b}"
        )
    return Template(source, tuple(segments))


def render(template: Template, record: DatasetRecord) -> tuple[str, int]:
    """Substitute a record into the template.

    Returns (prompted_text, mask_char_offset); the offset points at the
    "[MASK]" marker inside the prompted text. Raises RenderError when the
    record's payload shape does not match the template.
    """
    if template.is_pair and not record.is_pair:
        raise RenderError(
            f"record {record.id!r} is single-sentence but the template takes a pair"
        )
    if not template.is_pair and record.is_pair:
        raise RenderError(
            f"record {record.id!r} is a sentence pair but the template takes one sentence"
        )
    parts: list[str] = []
    offset = -1
    length = 0
    for seg in template.segments:
        if seg is Slot.MASK:
            offset = length
            piece = MASK_MARKER
        elif seg is Slot.TEXT:
            piece = record.text or ""
        elif seg is Slot.TEXT_A:
            piece = record.text_a or ""
        elif seg is Slot.TEXT_B:
            piece = record.text_b or ""
        else:
            piece = seg
        parts.append(piece)
        length += len(piece)
    return "".join(parts), offset
