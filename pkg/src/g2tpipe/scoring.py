"""Referenceless graph-text consistency scoring.

Two backends: a deterministic lexical surrogate for offline runs and tests,
and a client for the remote scoring protocol (POST /v1/score, GET /healthz).
The surrogate is an order-of-magnitude stand-in only; it is not calibrated
to any neural scorer.
"""

from __future__ import annotations

import string
import time
import unicodedata
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import requests

from .data_files import load_wordlist
from .graphs import GraphTextPair, linearize

LEXICAL_BACKEND = "lexical"

DEFAULT_STOPWORDS = load_wordlist("stopwords.txt")


class RemoteScoreError(RuntimeError):
    """Remote scoring failed; the message names the failing batch."""


@dataclass(frozen=True)
class ConsistencyScore:
    value: float
    backend: str
    sentence_id: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"consistency score {self.value} outside [0, 1]")


@dataclass(frozen=True)
class ScorerConfig:
    backend: str = LEXICAL_BACKEND
    endpoint: str = ""
    batch_size: int = 64
    timeout: float = 30.0
    max_retries: int = 3
    stopwords: frozenset = DEFAULT_STOPWORDS

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _tokens(s: str) -> tuple[str, ...]:
    """Normalized scoring tokens: case-folded NFC words with ASCII
    punctuation stripped from token edges."""
    folded = unicodedata.normalize("NFC", s.casefold())
    return tuple(
        stripped for token in folded.split() if (stripped := token.strip(string.punctuation))
    )


def _contains_run(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    width = len(needle)
    return any(
        tuple(haystack[i : i + width]) == tuple(needle)
        for i in range(len(haystack) - width + 1)
    )


def lexical_surrogate_score(
    pair: GraphTextPair, stopwords: frozenset = DEFAULT_STOPWORDS
) -> float:
    """Harmonic mean of graph-term recall and content-token precision.

    Recall: fraction of subject/object token runs found contiguously in the
    normalized text (predicates excluded - they are routinely paraphrased).
    Precision: fraction of non-stopword text tokens present anywhere in the
    bag of graph tokens (subjects, predicates and objects alike, so predicate
    words in the text are not penalized). Returns 0 when both sides are 0.
    """
    text_tokens = _tokens(pair.text)

    terms: list[tuple[str, ...]] = []
    bag: set[str] = set()
    for triplet in pair.graph:
        subject = _tokens(triplet.subject)
        predicate = _tokens(triplet.predicate)
        obj = _tokens(triplet.object)
        terms.extend(run for run in (subject, obj) if run)
        bag.update(subject)
        bag.update(predicate)
        bag.update(obj)

    found = sum(_contains_run(text_tokens, term) for term in terms)
    recall = found / len(terms) if terms else 0.0

    content = [token for token in text_tokens if token not in stopwords]
    precision = sum(token in bag for token in content) / len(content) if content else 0.0

    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


class RemoteScorer:
    """Client for the remote scoring protocol.

    ``POST {endpoint}/v1/score`` with ``{"items": [{"graph", "text"}, ...]}``
    answers ``{"scores": [...]}`` aligned by index. The backend identity is
    ``remote:<model id>`` as reported by ``GET {endpoint}/healthz``.
    """

    def __init__(
        self,
        config: ScorerConfig,
        session: requests.Session | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        if not config.endpoint:
            raise ValueError("remote scoring requires an endpoint")
        self._config = config
        self._session = session or requests.Session()
        self._sleep = sleeper
        self._base = config.endpoint.rstrip("/")
        self.model_id = self._probe_health()

    @property
    def backend(self) -> str:
        return f"remote:{self.model_id}"

    def _probe_health(self) -> str:
        try:
            response = self._session.get(f"{self._base}/healthz", timeout=self._config.timeout)
        except requests.RequestException as exc:
            raise RemoteScoreError(f"health probe failed for {self._base}: {exc}") from exc
        if response.status_code != 200:
            raise RemoteScoreError(
                f"scorer at {self._base} not healthy: HTTP {response.status_code}"
            )
        try:
            payload = response.json()
        except ValueError as exc:
            raise RemoteScoreError(f"malformed health response: {exc}") from exc
        if payload.get("status") != "ok" or "model" not in payload:
            raise RemoteScoreError(f"malformed health response: {payload!r}")
        return str(payload["model"])

    def _post_batch(self, batch_index: int, items: list[dict]) -> list[float]:
        last_error: Exception | None = None
        for attempt in range(1, self._config.max_retries + 1):
            try:
                response = self._session.post(
                    f"{self._base}/v1/score",
                    json={"items": items},
                    timeout=self._config.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    try:
                        scores = response.json().get("scores")
                    except ValueError as exc:
                        raise RemoteScoreError(f"batch {batch_index}: non-JSON response: {exc}") from exc
                    if not isinstance(scores, list) or len(scores) != len(items):
                        got = len(scores) if isinstance(scores, list) else "no"
                        raise RemoteScoreError(
                            f"batch {batch_index}: expected {len(items)} scores, got {got}"
                        )
                    return [float(s) for s in scores]
                if response.status_code not in (429,) and response.status_code < 500:
                    raise RemoteScoreError(
                        f"batch {batch_index}: HTTP {response.status_code}: {response.text[:200]}"
                    )
                last_error = RemoteScoreError(
                    f"batch {batch_index}: HTTP {response.status_code}"
                )
            if attempt < self._config.max_retries:
                self._sleep(0.5 * 2 ** (attempt - 1))
        raise RemoteScoreError(f"batch {batch_index} failed after {self._config.max_retries} attempts: {last_error}")

    def score_batch(self, pairs: Sequence[GraphTextPair]) -> list[float]:
        """Score pairs in order, in request chunks of ``batch_size``."""
        scores: list[float] = []
        size = self._config.batch_size
        for batch_index, start in enumerate(range(0, len(pairs), size)):
            chunk = pairs[start : start + size]
            items = [{"graph": linearize(p.graph), "text": p.text} for p in chunk]
            values = self._post_batch(batch_index, items)
            for value in values:
                if not 0.0 <= value <= 1.0:
                    raise RemoteScoreError(
                        f"batch {batch_index}: score {value} outside [0, 1]"
                    )
            scores.extend(values)
        return scores


def remote_score_batch(
    pairs: Sequence[GraphTextPair],
    config: ScorerConfig,
    session: requests.Session | None = None,
    sleeper: Callable[[float], None] = time.sleep,
) -> list[ConsistencyScore]:
    scorer = RemoteScorer(config, session=session, sleeper=sleeper)
    values = scorer.score_batch(pairs)
    return [
        ConsistencyScore(value, scorer.backend, pair.sentence_id)
        for value, pair in zip(values, pairs)
    ]


def score_pair(pair: GraphTextPair, config: ScorerConfig = ScorerConfig()) -> ConsistencyScore:
    """Score one pair with the configured backend.

    Backends are never swapped silently: a remote failure is an error, not a
    fallback to the surrogate.
    """
    if config.backend == LEXICAL_BACKEND:
        value = lexical_surrogate_score(pair, config.stopwords)
        return ConsistencyScore(value, LEXICAL_BACKEND, pair.sentence_id)
    if config.backend == "remote":
        return remote_score_batch([pair], config)[0]
    raise ValueError(f"unknown scorer backend {config.backend!r}")


def score_pairs(
    pairs: Iterable[GraphTextPair],
    config: ScorerConfig = ScorerConfig(),
    session: requests.Session | None = None,
) -> list[ConsistencyScore]:
    """Score many pairs, preserving order."""
    pairs = list(pairs)
    if config.backend == LEXICAL_BACKEND:
        return [
            ConsistencyScore(lexical_surrogate_score(p, config.stopwords), LEXICAL_BACKEND, p.sentence_id)
            for p in pairs
        ]
    if config.backend == "remote":
        return remote_score_batch(pairs, config, session=session)
    raise ValueError(f"unknown scorer backend {config.backend!r}")
