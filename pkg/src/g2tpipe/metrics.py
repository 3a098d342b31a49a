"""Deterministic surface metrics for graph-to-text evaluation.

Corpus BLEU-4 (exp smoothing of zero n-gram precisions), chrF++ (character
1-6-grams plus word 1-2-grams, beta 2, corpus-aggregated), TER (word edit
distance with shifts over total reference length), ROUGE-L (mean per-pair LCS
F1) and a METEOR-lite (exact + light-stemmed matching only; deliberately not
reported as METEOR).

Scores are tokenizer-relative. The pinned default splits on Unicode
punctuation and symbols, keeping punctuation between digits attached
(thousand/decimal separators); it is case-sensitive. A raw-whitespace mode
exists for debugging.
"""

from __future__ import annotations

import functools
import math
import re
import string
import sys
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

BLEU_ORDER = 4
CHRF_CHAR_ORDER = 6
CHRF_WORD_ORDER = 2
CHRF_BETA = 2.0
TER_MAX_SHIFT_SIZE = 10
# Beyond this hypothesis length the exhaustive shift search is skipped and
# TER degrades to plain edit distance; keeps worst-case cost bounded.
TER_MAX_SHIFT_SEARCH_TOKENS = 64

_ASCII_PUNCT = set(string.punctuation)


@functools.lru_cache(maxsize=None)
def _chars_in_categories(prefix: str) -> str:
    return "".join(
        chr(cp) for cp in range(sys.maxunicode + 1)
        if unicodedata.category(chr(cp)).startswith(prefix)
    )


@functools.lru_cache(maxsize=None)
def _intl_res() -> tuple[re.Pattern, re.Pattern, re.Pattern]:
    punct = re.escape(_chars_in_categories("P"))
    symbol = re.escape(_chars_in_categories("S"))
    return (
        re.compile(f"([^\\d])([{punct}])"),
        re.compile(f"([{punct}])([^\\d])"),
        re.compile(f"([{symbol}])"),
    )


def tokenize_international(text: str) -> list[str]:
    """Split on Unicode punctuation and symbols, except punctuation flanked
    by digits on both sides. Case-sensitive."""
    nondigit_punct, punct_nondigit, symbol = _intl_res()
    text = nondigit_punct.sub(r"\1 \2 ", text)
    text = punct_nondigit.sub(r" \1 \2", text)
    text = symbol.sub(r" \1 ", text)
    return text.split()


def tokenize_whitespace(text: str) -> list[str]:
    return text.split()

_TOKENIZERS: dict[str, Callable[[str], list[str]]] = {
    "international": tokenize_international,
    "whitespace": tokenize_whitespace,
}


def _tokenizer(name: str) -> Callable[[str], list[str]]:
    try:
        return _TOKENIZERS[name]
    except KeyError:
        raise ValueError(f"unknown tokenizer {name!r}") from None


def _check_corpus(hypotheses: Sequence[str], references: Sequence[str]) -> None:
    if len(hypotheses) != len(references):
        raise ValueError(
            f"corpus length mismatch: {len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise ValueError("corpus must contain at least one segment pair")


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def bleu(hypotheses: Sequence[str], references: Sequence[str], tokenizer: str = "international") -> float:
    """Corpus BLEU-4 with brevity penalty.

    Zero n-gram precisions are exp-smoothed: the k-th zero precision at order
    n becomes 1 / (2^k * total_n). An order with no hypothesis n-grams at all
    yields 0.
    """
    _check_corpus(hypotheses, references)
    tok = _tokenizer(tokenizer)

    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tok(hyp)
        ref_tokens = tok(ref)
        sys_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, BLEU_ORDER + 1):
            hyp_ngrams = _ngram_counts(hyp_tokens, n)
            ref_ngrams = _ngram_counts(ref_tokens, n)
            total[n - 1] += sum(hyp_ngrams.values())
            correct[n - 1] += sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())

    if sys_len == 0:
        return 0.0

    smooth = 1.0
    log_precision_sum = 0.0
    for n in range(1, BLEU_ORDER + 1):
        if total[n - 1] == 0:
            return 0.0
        if correct[n - 1] == 0:
            smooth *= 2.0
            precision = 1.0 / (smooth * total[n - 1])
        else:
            precision = correct[n - 1] / total[n - 1]
        log_precision_sum += math.log(precision)

    brevity = 1.0 if sys_len >= ref_len else math.exp(1.0 - ref_len / sys_len)
    return 100.0 * brevity * math.exp(log_precision_sum / BLEU_ORDER)


def _chrf_word_tokens(text: str) -> list[str]:
    """Whitespace tokens with one leading or trailing ASCII punctuation
    character peeled off, per the chrF++ reference tokenization."""
    out: list[str] = []
    for word in text.split():
        if len(word) > 1 and word[-1] in _ASCII_PUNCT:
            out.extend((word[:-1], word[-1]))
        elif len(word) > 1 and word[0] in _ASCII_PUNCT:
            out.extend((word[0], word[1:]))
        else:
            out.append(word)
    return out


def chrf_pp(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Corpus chrF++: F-beta (beta 2) of precision and recall averaged over
    character orders 1-6 and word orders 1-2, from corpus-summed statistics.

    Character n-grams are taken over the segment with all whitespace removed.
    Orders absent from both sides of the whole corpus are skipped.
    """
    _check_corpus(hypotheses, references)
    n_orders = CHRF_CHAR_ORDER + CHRF_WORD_ORDER
    totals = [[0, 0, 0] for _ in range(n_orders)]  # hyp, ref, match per order

    def accumulate(slot: int, hyp_grams: Counter, ref_grams: Counter) -> None:
        totals[slot][0] += sum(hyp_grams.values())
        totals[slot][1] += sum(ref_grams.values())
        totals[slot][2] += sum((hyp_grams & ref_grams).values())

    for hyp, ref in zip(hypotheses, references):
        hyp_chars = re.sub(r"\s+", "", hyp)
        ref_chars = re.sub(r"\s+", "", ref)
        for n in range(1, CHRF_CHAR_ORDER + 1):
            accumulate(
                n - 1,
                Counter(hyp_chars[i : i + n] for i in range(len(hyp_chars) - n + 1)),
                Counter(ref_chars[i : i + n] for i in range(len(ref_chars) - n + 1)),
            )
        hyp_words = _chrf_word_tokens(hyp)
        ref_words = _chrf_word_tokens(ref)
        for n in range(1, CHRF_WORD_ORDER + 1):
            accumulate(
                CHRF_CHAR_ORDER + n - 1,
                _ngram_counts(hyp_words, n),
                _ngram_counts(ref_words, n),
            )

    precision_sum = 0.0
    recall_sum = 0.0
    included = 0
    for hyp_total, ref_total, match_total in totals:
        if hyp_total == 0 and ref_total == 0:
            continue
        precision_sum += match_total / hyp_total if hyp_total else 0.0
        recall_sum += match_total / ref_total if ref_total else 0.0
        included += 1
    if included == 0:
        return 0.0
    avg_precision = precision_sum / included
    avg_recall = recall_sum / included
    denominator = CHRF_BETA**2 * avg_precision + avg_recall
    if denominator == 0.0:
        return 0.0
    return 100.0 * (1 + CHRF_BETA**2) * avg_precision * avg_recall / denominator


def _levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, token_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, token_b in enumerate(b, start=1):
            cost = 0 if token_a == token_b else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
        previous = current
    return previous[-1]


def _ref_run_set(ref: Sequence[str], max_size: int) -> set[tuple[str, ...]]:
    runs: set[tuple[str, ...]] = set()
    for size in range(1, min(max_size, len(ref)) + 1):
        for i in range(len(ref) - size + 1):
            runs.add(tuple(ref[i : i + size]))
    return runs


def _ter_edits(hyp: list[str], ref: list[str]) -> int:
    """Greedy shift search: apply the single best shift while it strictly
    lowers shifts-plus-edit-distance, then add the residual edit distance.
    Only hypothesis runs that occur verbatim in the reference may shift."""
    shifts = 0
    current = list(hyp)
    if len(current) > TER_MAX_SHIFT_SEARCH_TOKENS:
        return _levenshtein(current, ref)
    ref_runs = _ref_run_set(ref, TER_MAX_SHIFT_SIZE)
    distance = _levenshtein(current, ref)
    while distance > 1:
        best_distance = distance
        best_sequence: list[str] | None = None
        for size in range(1, min(TER_MAX_SHIFT_SIZE, len(current)) + 1):
            for start in range(len(current) - size + 1):
                run = tuple(current[start : start + size])
                if run not in ref_runs:
                    continue
                remainder = current[:start] + current[start + size :]
                for insert_at in range(len(remainder) + 1):
                    if insert_at == start:
                        continue
                    candidate = remainder[:insert_at] + list(run) + remainder[insert_at:]
                    candidate_distance = _levenshtein(candidate, ref)
                    if candidate_distance < best_distance:
                        best_distance = candidate_distance
                        best_sequence = candidate
        if best_sequence is None or best_distance + 1 >= distance:
            break
        shifts += 1
        current = best_sequence
        distance = best_distance
    return shifts + distance


def ter(hypotheses: Sequence[str], references: Sequence[str], tokenizer: str = "international") -> float:
    """Corpus TER: total edits (including shifts) over total reference
    length, times 100. Lower is better; values may exceed 100."""
    _check_corpus(hypotheses, references)
    tok = _tokenizer(tokenizer)
    total_edits = 0
    total_ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tok(hyp)
        ref_tokens = tok(ref)
        total_edits += _ter_edits(hyp_tokens, ref_tokens)
        total_ref_len += len(ref_tokens)
    if total_ref_len == 0:
        raise ValueError("TER undefined: references contain no tokens")
    return 100.0 * total_edits / total_ref_len


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0] * (len(b) + 1)
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[-1]


def rouge_l(hypotheses: Sequence[str], references: Sequence[str], tokenizer: str = "international") -> float:
    """Mean per-pair LCS F1, times 100."""
    _check_corpus(hypotheses, references)
    tok = _tokenizer(tokenizer)
    scores = []
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tok(hyp)
        ref_tokens = tok(ref)
        if not hyp_tokens and not ref_tokens:
            scores.append(1.0)
            continue
        if not hyp_tokens or not ref_tokens:
            scores.append(0.0)
            continue
        lcs = _lcs_length(hyp_tokens, ref_tokens)
        if lcs == 0:
            scores.append(0.0)
            continue
        precision = lcs / len(hyp_tokens)
        recall = lcs / len(ref_tokens)
        scores.append(2 * precision * recall / (precision + recall))
    return 100.0 * sum(scores) / len(scores)


_STEM_SUFFIXES = ("ing", "ed", "es", "ly", "s")


def _light_stem(token: str) -> str:
    lowered = token.lower()
    for suffix in _STEM_SUFFIXES:
        if lowered.endswith(suffix) and len(lowered) - len(suffix) >= 3:
            return lowered[: -len(suffix)]
    return lowered


def _meteor_alignment(hyp: list[str], ref: list[str]) -> list[tuple[int, int]]:
    taken_ref: set[int] = set()
    pairs: list[tuple[int, int]] = []
    unmatched: list[int] = []
    for i, token in enumerate(hyp):
        hit = next((j for j, r in enumerate(ref) if j not in taken_ref and r == token), None)
        if hit is None:
            unmatched.append(i)
        else:
            taken_ref.add(hit)
            pairs.append((i, hit))
    for i in unmatched:
        stem = _light_stem(hyp[i])
        hit = next(
            (j for j, r in enumerate(ref) if j not in taken_ref and _light_stem(r) == stem),
            None,
        )
        if hit is not None:
            taken_ref.add(hit)
            pairs.append((i, hit))
    return sorted(pairs)


def meteor_lite(hypotheses: Sequence[str], references: Sequence[str], tokenizer: str = "international") -> float:
    """Unigram F-mean (recall-weighted 9:1) with a fragmentation penalty,
    matching exactly first and then on light stems. No synonym resource is
    consulted, hence the distinct name."""
    _check_corpus(hypotheses, references)
    tok = _tokenizer(tokenizer)
    scores = []
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tok(hyp)
        ref_tokens = tok(ref)
        pairs = _meteor_alignment(hyp_tokens, ref_tokens)
        matches = len(pairs)
        if matches == 0:
            scores.append(0.0)
            continue
        precision = matches / len(hyp_tokens)
        recall = matches / len(ref_tokens)
        f_mean = 10 * precision * recall / (recall + 9 * precision)
        chunks = 1 + sum(
            1
            for (h1, r1), (h2, r2) in zip(pairs, pairs[1:])
            if h2 != h1 + 1 or r2 != r1 + 1
        )
        penalty = 0.5 * (chunks / matches) ** 3
        scores.append(f_mean * (1.0 - penalty))
    return 100.0 * sum(scores) / len(scores)


@dataclass(frozen=True)
class MetricReport:
    """All deterministic metrics for one corpus.

    The neural-metric fields stay None here; external values can be merged
    into the serialized report.
    """

    bleu: float
    chrf_pp: float
    ter: float
    rouge_l: float
    meteor_lite: float
    corpus_size: int
    tokenizer: str
    bleurt: float | None = None
    bert_score_f1: float | None = None

    def to_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "chrf_pp": self.chrf_pp,
            "ter": self.ter,
            "rouge_l": self.rouge_l,
            "meteor_lite": self.meteor_lite,
            "corpus_size": self.corpus_size,
            "tokenizer": self.tokenizer,
            "bleurt": self.bleurt,
            "bert_score_f1": self.bert_score_f1,
        }


def compute_report(
    hypotheses: Sequence[str], references: Sequence[str], tokenizer: str = "international"
) -> MetricReport:
    return MetricReport(
        bleu=bleu(hypotheses, references, tokenizer),
        chrf_pp=chrf_pp(hypotheses, references),
        ter=ter(hypotheses, references, tokenizer),
        rouge_l=rouge_l(hypotheses, references, tokenizer),
        meteor_lite=meteor_lite(hypotheses, references, tokenizer),
        corpus_size=len(hypotheses),
        tokenizer=tokenizer,
    )
