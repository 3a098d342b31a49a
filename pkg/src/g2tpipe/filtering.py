"""Threshold filtering into curated/noise sets, curated:noise mixing for
controlled-ratio experiments, and shallow diagnostics for rejected pairs."""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence, TypeVar

from .graphs import GraphTextPair
from .ingest import DEFAULT_ABBREVIATIONS, DEFAULT_PRONOUNS
from .records import ScoredPair

T = TypeVar("T")

# Auxiliaries, copulas and modals: the shallow stand-in for "this text has a
# finite verb". Encyclopedic first sentences are overwhelmingly copular.
VERB_MARKERS = frozenset(
    "is are was were be been being am has have had do does did "
    "may might can could will would shall should must".split()
)

_BE_FORMS = frozenset({"is", "was", "are", "were"})


class RejectionTag(Enum):
    INCOMPLETE_TEXT = "IncompleteText"
    AMBIGUOUS_PRONOUN = "AmbiguousPronoun"
    OTHER = "Other"


@dataclass(frozen=True)
class RejectionDiagnostic:
    sentence_id: str
    tag: RejectionTag

    def to_record(self) -> dict:
        return {"sentence_id": self.sentence_id, "tag": self.tag.value}


@dataclass(frozen=True)
class FilterConfig:
    threshold: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class CuratedDataset:
    pairs: tuple[ScoredPair, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        threshold = self.provenance.get("threshold")
        if threshold is not None:
            for scored in self.pairs:
                if scored.score < threshold:
                    raise ValueError(
                        f"curated pair {scored.pair.sentence_id} scores below threshold"
                    )

    @property
    def n_prime(self) -> int:
        return len(self.pairs)


class MixedBackendError(ValueError):
    """Scores from different backends may not be filtered or merged together."""


def single_backend(scored: Sequence[ScoredPair]) -> str | None:
    backends = {s.backend for s in scored}
    if len(backends) > 1:
        raise MixedBackendError(f"mixed scorer backends: {sorted(backends)}")
    return next(iter(backends)) if backends else None


def filter_by_threshold(
    scored: Sequence[ScoredPair], config: FilterConfig = FilterConfig()
) -> tuple[CuratedDataset, list[ScoredPair]]:
    """Partition scored pairs at the threshold (boundary inclusive: a pair
    scoring exactly the threshold is retained). Input order is preserved
    within both outputs."""
    backend = single_backend(scored)
    curated = [s for s in scored if s.score >= config.threshold]
    noise = [s for s in scored if s.score < config.threshold]
    provenance = {"backend": backend, "threshold": config.threshold, "seed": config.seed}
    return CuratedDataset(tuple(curated), provenance), noise


def _classifier_tokens(text: str) -> list[str]:
    return [
        stripped
        for token in text.casefold().split()
        if (stripped := token.strip(string.punctuation))
    ]


def classify_rejection(
    pair: GraphTextPair,
    abbreviations: frozenset = DEFAULT_ABBREVIATIONS,
    pronouns: frozenset = DEFAULT_PRONOUNS,
) -> RejectionDiagnostic:
    """Tag a filtered-out pair with the failure class it most resembles.

    First matching rule wins: IncompleteText when the text ends with a guard
    abbreviation, or has no verb-marker token and no terminal punctuation;
    AmbiguousPronoun when the text opens with a pronoun followed by a be-form,
    or any subject is a single character; otherwise Other. These rules label,
    they never filter.
    """
    text = pair.text.strip()
    tokens = _classifier_tokens(text)

    last_word = text.rsplit(None, 1)[-1] if text.split() else ""
    ends_with_abbrev = last_word in abbreviations
    has_verb = any(token in VERB_MARKERS for token in tokens)
    terminated = text.endswith((".", "!", "?"))
    if ends_with_abbrev or (not has_verb and not terminated):
        return RejectionDiagnostic(pair.sentence_id, RejectionTag.INCOMPLETE_TEXT)

    pronoun_opening = (
        len(tokens) >= 2 and tokens[0] in pronouns and tokens[1] in _BE_FORMS
    )
    single_char_subject = any(len(t.subject) == 1 for t in pair.graph)
    if pronoun_opening or single_char_subject:
        return RejectionDiagnostic(pair.sentence_id, RejectionTag.AMBIGUOUS_PRONOUN)

    return RejectionDiagnostic(pair.sentence_id, RejectionTag.OTHER)


def _round_half_up(value: Fraction) -> int:
    return int(value + Fraction(1, 2))


def mix_curated_noise(
    curated_pool: Sequence[T],
    noise_pool: Sequence[T],
    curated_pct: float,
    total: int = 50_000,
    seed: int = 0,
) -> list[T]:
    """Draw a training split of ``total`` items with ``curated_pct`` percent
    from the curated pool and the remainder from the noise pool.

    Sampling is uniform without replacement per pool; the curated count is
    rounded half-up; the combined selection is shuffled. Deterministic in
    (pools, curated_pct, total, seed).
    """
    if not 0 <= curated_pct <= 100:
        raise ValueError("curated_pct must lie in [0, 100]")
    curated_count = _round_half_up(Fraction(str(curated_pct)) * total / 100)
    noise_count = total - curated_count
    if curated_count > len(curated_pool):
        raise ValueError(
            f"curated pool too small: need {curated_count}, have {len(curated_pool)} "
            f"(short by {curated_count - len(curated_pool)})"
        )
    if noise_count > len(noise_pool):
        raise ValueError(
            f"noise pool too small: need {noise_count}, have {len(noise_pool)} "
            f"(short by {noise_count - len(noise_pool)})"
        )
    rng = random.Random(seed)
    selection = rng.sample(list(curated_pool), curated_count)
    selection += rng.sample(list(noise_pool), noise_count)
    rng.shuffle(selection)
    return selection
