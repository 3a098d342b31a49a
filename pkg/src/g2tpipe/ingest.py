"""Source-sentence collection: stream raw articles, split out the first
sentence, strip parentheticals, and apply length/pronoun constraints."""

from __future__ import annotations

import hashlib
import json
import string
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .data_files import load_wordlist

_TERMINATORS = ".!?"

#: Case-insensitive first tokens that disqualify a sentence.
DEFAULT_PRONOUNS = load_wordlist("pronouns.txt")

#: Dot-terminated tokens that never end a sentence (case-sensitive).
DEFAULT_ABBREVIATIONS = load_wordlist("abbreviations.txt")


class IngestError(RuntimeError):
    """Fatal problem reading an article source."""


class RejectReason(Enum):
    TOO_SHORT = "TooShort"
    TOO_LONG = "TooLong"
    PRONOUN_INITIAL = "PronounInitial"
    NO_SENTENCE_FOUND = "NoSentenceFound"
    EMPTY_AFTER_CLEANUP = "EmptyAfterCleanup"


@dataclass(frozen=True)
class ArticleRecord:
    """One raw article. Bodies are expected to be non-empty text; empty
    bodies flow through as NoSentenceFound rejections."""

    article_id: str
    title: str
    body: str


@dataclass(frozen=True)
class SourceSentence:
    """A cleaned candidate sentence with provenance.

    ``char_len`` counts Unicode scalar values, not bytes.
    """

    sentence_id: str
    text: str
    article_id: str
    char_len: int

    def __post_init__(self) -> None:
        if self.char_len != len(self.text):
            raise ValueError("char_len must equal the Unicode scalar count of text")

    def to_record(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "article_id": self.article_id,
            "text": self.text,
            "char_len": self.char_len,
        }

    @staticmethod
    def from_record(record: dict) -> "SourceSentence":
        return SourceSentence(
            record["sentence_id"], record["text"], record["article_id"], record["char_len"]
        )


@dataclass
class IngestReport:
    articles_seen: int = 0
    sentences_emitted: int = 0
    cleanup_flags: int = 0
    rejections: Counter = field(default_factory=Counter)

    def reject(self, reason: RejectReason) -> None:
        self.rejections[reason.value] += 1

    def merge(self, other: "IngestReport") -> "IngestReport":
        merged = IngestReport(
            articles_seen=self.articles_seen + other.articles_seen,
            sentences_emitted=self.sentences_emitted + other.sentences_emitted,
            cleanup_flags=self.cleanup_flags + other.cleanup_flags,
        )
        merged.rejections = self.rejections + other.rejections
        return merged

    def is_conserved(self) -> bool:
        return self.articles_seen == self.sentences_emitted + sum(self.rejections.values())

    def to_dict(self) -> dict:
        return {
            "articles_seen": self.articles_seen,
            "sentences_emitted": self.sentences_emitted,
            "cleanup_flags": self.cleanup_flags,
            "rejections": dict(sorted(self.rejections.items())),
        }


@dataclass(frozen=True)
class IngestConfig:
    min_len: int = 10
    max_len: int = 500
    blocked_pronouns: frozenset = DEFAULT_PRONOUNS
    abbreviations: frozenset = DEFAULT_ABBREVIATIONS
    abbreviation_guard: bool = True


def sentence_id_for(article_id: str, text: str) -> str:
    digest = hashlib.sha256(f"{article_id}\x1f{text}".encode("utf-8")).hexdigest()
    return digest[:16]


def _ends_with_abbreviation(prefix: str, abbreviations: frozenset) -> bool:
    parts = prefix.rsplit(None, 1)
    return bool(parts) and parts[-1] in abbreviations


def split_first_sentence(
    body: str,
    abbreviations: frozenset = DEFAULT_ABBREVIATIONS,
    abbreviation_guard: bool = True,
) -> str | None:
    """Return the first maximal sentence of ``body``, or None.

    A sentence ends at a terminator (``.``, ``!``, ``?``) followed by
    whitespace or end of text. A ``.`` that completes a guarded abbreviation
    token (e.g. ``No.``) does not end the sentence while the guard is on.
    """
    text = body.lstrip()
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        following = text[i + 1 : i + 2]
        if following and not following.isspace():
            continue
        if ch == "." and abbreviation_guard and _ends_with_abbreviation(text[: i + 1], abbreviations):
            continue
        return text[: i + 1].strip()
    return None


def strip_parentheticals(text: str) -> tuple[str, bool]:
    """Remove balanced ``( ... )`` groups, including nested ones.

    An unmatched opener removes everything from the opener to the end of the
    string; an unmatched closer is dropped in place. Either case sets the
    cleanup flag. Whitespace runs are collapsed and the result is trimmed.
    """
    out: list[str] = []
    marks: list[int] = []
    flagged = False
    for ch in text:
        if ch == "(":
            marks.append(len(out))
        elif ch == ")":
            if marks:
                del out[marks.pop() :]
            else:
                flagged = True
        elif not marks:
            out.append(ch)
    if marks:
        del out[marks[0] :]
        flagged = True
    return " ".join("".join(out).split()), flagged


def apply_constraints(
    candidate: str, article_id: str, config: IngestConfig = IngestConfig()
) -> SourceSentence | RejectReason:
    """Accept a parenthetical-stripped candidate sentence or name the reason
    it is rejected. Length is measured in Unicode scalar values."""
    char_len = len(candidate)
    if char_len < config.min_len:
        return RejectReason.TOO_SHORT
    if char_len > config.max_len:
        return RejectReason.TOO_LONG
    first_token = candidate.split(None, 1)[0].strip(string.punctuation)
    if first_token.casefold() in config.blocked_pronouns:
        return RejectReason.PRONOUN_INITIAL
    return SourceSentence(sentence_id_for(article_id, candidate), candidate, article_id, char_len)


def ingest_stream(
    articles: Iterable[ArticleRecord], config: IngestConfig = IngestConfig()
) -> tuple[Iterator[SourceSentence], IngestReport]:
    """Run split -> strip -> constrain over articles, in input order.

    Returns a lazy sentence stream and the live report; report totals are
    final once the stream is exhausted.
    """
    report = IngestReport()

    def generate() -> Iterator[SourceSentence]:
        for article in articles:
            report.articles_seen += 1
            raw = split_first_sentence(article.body, config.abbreviations, config.abbreviation_guard)
            if raw is None:
                report.reject(RejectReason.NO_SENTENCE_FOUND)
                continue
            cleaned, flagged = strip_parentheticals(raw)
            if flagged:
                report.cleanup_flags += 1
            if not any(ch.isalnum() for ch in cleaned):
                # nothing but punctuation left, e.g. a fully parenthetical sentence
                report.reject(RejectReason.EMPTY_AFTER_CLEANUP)
                continue
            outcome = apply_constraints(cleaned, article.article_id, config)
            if isinstance(outcome, RejectReason):
                report.reject(outcome)
                continue
            report.sentences_emitted += 1
            yield outcome

    return generate(), report


def read_articles_jsonl(path: str | Path) -> Iterator[ArticleRecord]:
    """Read newline-delimited JSON articles with fields id/title/text."""
    offset = 0
    with open(path, "rb") as fh:
        for raw_line in fh:
            line_start = offset
            offset += len(raw_line)
            if not raw_line.strip():
                continue
            try:
                record = json.loads(raw_line.decode("utf-8"))
                yield ArticleRecord(str(record["id"]), record.get("title", ""), record["text"])
            except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
                raise IngestError(f"unreadable article record at byte offset {line_start}: {exc}") from exc


def read_articles_textdir(path: str | Path) -> Iterator[ArticleRecord]:
    """Read one plain-text document per file, ordered by filename."""
    base = Path(path)
    for file in sorted(p for p in base.iterdir() if p.is_file()):
        try:
            body = file.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise IngestError(f"unreadable article file {file}: {exc}") from exc
        yield ArticleRecord(file.stem, file.stem, body)
