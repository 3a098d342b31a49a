"""Deterministic question-generation / question-answering consistency scorer.

For each triplet in the linearized graph, two questions are generated over
its answer candidates (object and subject); an extractive answerer selects
the best token window in the text and scores it by token F1 against the
expected answer. The reverse direction generates questions from the text's
content spans and answers them against the graph's fields. The item score
is the mean over all questions, clamped to [0, 1]. Everything is pure and
greedy, so identical requests score identically.
"""

from __future__ import annotations

import re
import string
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

MODEL_ID = "span-f1-qgqa/1"

# Function words excluded from text-side answer candidates.
STOPWORDS = frozenset(
    """the an and or but if then is are was were be been being am do does did
    have has had of in on at to for with from by as into over under about
    after before between during through while where when which who whom whose
    what why how there here it its this that these those he him his she her
    they them their we us our you your not no nor so too very also just can
    could will would shall should may might must""".split()
)

_OPENER = "(<S>"
_PRED = "| <P>"
_OBJ = "| <O>"
_SEPARATOR = re.compile(r",\s*(?=\(<S>)")

MAX_CANDIDATE_SPAN = 4


def tokens(text: str) -> tuple[str, ...]:
    folded = unicodedata.normalize("NFC", text.casefold())
    return tuple(
        stripped for word in folded.split() if (stripped := word.strip(string.punctuation))
    )


def parse_linearized(graph: str) -> list[tuple[str, str, str]]:
    """Lenient reader of the tagged triplet wire format.

    Malformed input yields as many well-formed triplets as can be read;
    nothing raises, because arbitrary UTF-8 must still produce a score.
    """
    triplets = []
    position = graph.find(_OPENER)
    while position >= 0:
        subject_start = position + len(_OPENER)
        pred_at = graph.find(_PRED, subject_start)
        if pred_at < 0:
            break
        obj_at = graph.find(_OBJ, pred_at + len(_PRED))
        if obj_at < 0:
            break
        close = _find_close(graph, obj_at + len(_OBJ))
        if close < 0:
            break
        subject = graph[subject_start:pred_at].strip()
        predicate = graph[pred_at + len(_PRED) : obj_at].strip()
        obj = graph[obj_at + len(_OBJ) : close].strip()
        if subject and predicate and obj:
            triplets.append((subject, predicate, obj))
        position = graph.find(_OPENER, close + 1)
    return triplets


def _find_close(graph: str, start: int) -> int:
    scan = start
    while True:
        close = graph.find(")", scan)
        if close < 0:
            return -1
        rest = close + 1
        if graph[rest:].strip() == "" or _SEPARATOR.match(graph, rest):
            return close
        scan = rest


@dataclass(frozen=True)
class Question:
    prompt: str
    expected: tuple[str, ...]


def questions_from_graph(triplets: Sequence[tuple[str, str, str]]) -> list[Question]:
    questions = []
    for subject, predicate, obj in triplets:
        expected_obj = tokens(obj)
        if expected_obj:
            questions.append(Question(f"What is the {predicate} of {subject}?", expected_obj))
        expected_subj = tokens(subject)
        if expected_subj:
            questions.append(Question(f"Which entity has {predicate} {obj}?", expected_subj))
    return questions


def token_f1(a: Sequence[str], b: Sequence[str]) -> float:
    if not a or not b:
        return 0.0
    overlap = sum((Counter(a) & Counter(b)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(a)
    recall = overlap / len(b)
    return 2 * precision * recall / (precision + recall)


def best_window_f1(haystack: Sequence[str], expected: Sequence[str]) -> float:
    """Extractive answer: the best token F1 any contiguous window achieves."""
    if not haystack or not expected:
        return 0.0
    best = 0.0
    max_width = min(len(haystack), len(expected) + 2)
    for width in range(1, max_width + 1):
        for start in range(len(haystack) - width + 1):
            best = max(best, token_f1(haystack[start : start + width], expected))
            if best == 1.0:
                return 1.0
    return best


def candidate_spans(text_tokens: Sequence[str]) -> list[tuple[str, ...]]:
    """Content spans of the text: maximal stopword-free runs, chunked."""
    spans: list[tuple[str, ...]] = []
    run: list[str] = []
    for token in list(text_tokens) + [""]:
        if token and token not in STOPWORDS:
            run.append(token)
            continue
        while run:
            spans.append(tuple(run[:MAX_CANDIDATE_SPAN]))
            run = run[MAX_CANDIDATE_SPAN:]
    return spans


class SpanF1Scorer:
    """The pinned deterministic backend."""

    model_id = MODEL_ID

    def score_item(self, graph: str, text: str) -> float:
        text_tokens = tokens(text)
        if not text_tokens:
            return 0.0
        triplets = parse_linearized(graph)

        scores: list[float] = []
        for question in questions_from_graph(triplets):
            scores.append(best_window_f1(text_tokens, question.expected))

        field_sequences = [
            sequence
            for triplet in triplets
            for sequence in (tokens(triplet[0]), tokens(triplet[1]), tokens(triplet[2]))
            if sequence
        ]
        for span in candidate_spans(text_tokens):
            scores.append(
                max((token_f1(span, field) for field in field_sequences), default=0.0)
            )

        if not scores:
            return 0.0
        value = sum(scores) / len(scores)
        return min(1.0, max(0.0, value))

    def score_items(self, items: Iterable[dict]) -> list[float]:
        return [self.score_item(item["graph"], item["text"]) for item in items]


BACKENDS = {"span-f1": SpanF1Scorer}
