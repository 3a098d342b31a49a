"""Triplet data model, the canonical tagged linearization, and the parser
for tagged triplet strings produced by the extraction model."""

from __future__ import annotations

import re
import string
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

OPENER = "(<S>"
PRED_DELIM = "| <P>"
OBJ_DELIM = "| <O>"

# Substrings that would make the wire format ambiguous. Fields carrying them
# are rejected at construction instead of escaped.
RESERVED_SEQUENCES = (PRED_DELIM, OBJ_DELIM, OPENER)

# Separator between two linearized triplets. The lookahead requires the next
# opener tag so that objects may legally contain "), (".
_SEPARATOR_RE = re.compile(r",\s*(?=\(<S>)")


class ParseErrorKind(Enum):
    MISSING_SUBJECT = "MissingSubject"
    MISSING_PREDICATE = "MissingPredicate"
    MISSING_OBJECT = "MissingObject"
    UNTERMINATED_TRIPLET = "UnterminatedTriplet"
    EMPTY_FIELD = "EmptyField"
    NO_TRIPLETS = "NoTriplets"


class TripletParseError(ValueError):
    """Raised when a tagged triplet string cannot be parsed.

    ``byte_offset`` locates the problem within the UTF-8 encoding of the
    input string.
    """

    def __init__(self, kind: ParseErrorKind, byte_offset: int):
        super().__init__(f"{kind.value} at byte offset {byte_offset}")
        self.kind = kind
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class Triplet:
    """One (subject, predicate, object) fact.

    Fields are trimmed at construction and must be non-empty and free of the
    reserved delimiter sequences.
    """

    subject: str
    predicate: str
    object: str

    def __post_init__(self) -> None:
        for name in ("subject", "predicate", "object"):
            value = getattr(self, name).strip()
            if not value:
                raise ValueError(f"triplet {name} must be non-empty after trimming")
            for seq in RESERVED_SEQUENCES:
                if seq in value:
                    raise ValueError(f"triplet {name} contains reserved sequence {seq!r}")
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.object)


@dataclass(frozen=True)
class TripletSet:
    """An ordered, non-empty collection of triplets for one sample.

    Order and duplicates are preserved so downstream analytics see the raw
    extraction output.
    """

    triplets: tuple[Triplet, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "triplets", tuple(self.triplets))
        if not self.triplets:
            raise ValueError("a triplet set must contain at least one triplet")

    @property
    def size(self) -> int:
        return len(self.triplets)

    def __len__(self) -> int:
        return len(self.triplets)

    def __iter__(self) -> Iterator[Triplet]:
        return iter(self.triplets)

    def __getitem__(self, index: int) -> Triplet:
        return self.triplets[index]


@dataclass(frozen=True)
class GraphTextPair:
    """A graph paired with the sentence it was extracted from.

    The text is only required to be non-empty: pairs representing upstream
    failures (truncated or pronoun-initial sentences) must remain expressible
    so they can be scored, filtered and diagnosed.
    """

    sentence_id: str
    graph: TripletSet
    text: str

    def __post_init__(self) -> None:
        if not self.sentence_id:
            raise ValueError("sentence_id must be non-empty")
        if not self.text.strip():
            raise ValueError("pair text must be non-empty")


def linearize(graph: TripletSet) -> str:
    """Render a triplet set in the canonical tagged form.

    Each triplet becomes ``(<S> s| <P> p| <O> o)`` and triplets are joined
    with ``", "``; exactly one space follows each tag.
    """
    return ", ".join(
        f"(<S> {t.subject}{PRED_DELIM} {t.predicate}{OBJ_DELIM} {t.object})"
        for t in graph
    )


def _byte_offset(raw: str, index: int) -> int:
    return len(raw[:index].encode("utf-8"))


def _skip_spaces(raw: str, pos: int) -> int:
    while pos < len(raw) and raw[pos] == " ":
        pos += 1
    return pos


def _find_object_end(raw: str, start: int) -> tuple[int, int]:
    """Locate the closing paren of an object starting at ``start``.

    The object extends to the first ``)`` that is followed by end-of-input
    (modulo whitespace) or by a separator leading into the next opener tag.
    Returns ``(close_index, next_opener_index)`` with ``-1`` for the opener
    when the input ends. No slicing, so adversarial inputs stay linear.
    """
    scan = start
    n = len(raw)
    while True:
        close = raw.find(")", scan)
        if close < 0:
            raise TripletParseError(ParseErrorKind.UNTERMINATED_TRIPLET, _byte_offset(raw, start))
        after = close + 1
        i = after
        while i < n and raw[i].isspace():
            i += 1
        if i == n:
            return close, -1
        match = _SEPARATOR_RE.match(raw, after)
        if match is not None:
            return close, match.end()
        scan = after


def _field(raw: str, start: int, end: int, misplaced_kind: ParseErrorKind) -> str:
    """Extract and validate one field of the triplet being scanned.

    A reserved sequence inside the field region means the input's tags are
    malformed (duplicated, reordered, or a new triplet opened early); the
    error kind names the expectation that was violated.
    """
    value = raw[start:end].strip()
    if not value:
        raise TripletParseError(ParseErrorKind.EMPTY_FIELD, _byte_offset(raw, start))
    for seq in RESERVED_SEQUENCES:
        at = value.find(seq)
        if at >= 0:
            kind = ParseErrorKind.UNTERMINATED_TRIPLET if seq == OPENER else misplaced_kind
            raise TripletParseError(kind, _byte_offset(raw, start + at))
    return value


def parse_triplets(raw: str) -> TripletSet:
    """Parse a tagged triplet string into a :class:`TripletSet`.

    The scan is anchored: a triplet opens at the ``(<S>`` tag, the predicate
    begins after ``| <P>`` and the object after ``| <O>``. Commas and
    parentheses inside objects are legal. Zero or more spaces are accepted
    after each tag; fields are trimmed. Raises :class:`TripletParseError` on
    any malformed input; never anything else.
    """
    start = raw.find(OPENER)
    if start < 0:
        kind = (
            ParseErrorKind.MISSING_SUBJECT
            if (PRED_DELIM in raw or OBJ_DELIM in raw)
            else ParseErrorKind.NO_TRIPLETS
        )
        raise TripletParseError(kind, 0)

    triplets: list[Triplet] = []
    pos = start
    while True:
        pos = _skip_spaces(raw, pos + len(OPENER))
        pred_at = raw.find(PRED_DELIM, pos)
        if pred_at < 0:
            raise TripletParseError(ParseErrorKind.MISSING_PREDICATE, _byte_offset(raw, pos))
        subject = _field(raw, pos, pred_at, ParseErrorKind.MISSING_PREDICATE)

        pos = _skip_spaces(raw, pred_at + len(PRED_DELIM))
        obj_at = raw.find(OBJ_DELIM, pos)
        if obj_at < 0:
            raise TripletParseError(ParseErrorKind.MISSING_OBJECT, _byte_offset(raw, pos))
        predicate = _field(raw, pos, obj_at, ParseErrorKind.MISSING_OBJECT)

        pos = _skip_spaces(raw, obj_at + len(OBJ_DELIM))
        close, next_opener = _find_object_end(raw, pos)
        obj = _field(raw, pos, close, ParseErrorKind.UNTERMINATED_TRIPLET)

        triplets.append(Triplet(subject, predicate, obj))
        if next_opener < 0:
            return TripletSet(tuple(triplets))
        pos = next_opener


def normalize_surface(s: str) -> str:
    """Canonical surface form used by analytics and the lexical scorer.

    Case-folds, applies Unicode NFC, collapses internal whitespace to single
    spaces and strips leading/trailing ASCII punctuation. Idempotent.
    """
    folded = unicodedata.normalize("NFC", s.casefold())
    collapsed = " ".join(folded.split())
    return collapsed.strip(string.punctuation).strip()
