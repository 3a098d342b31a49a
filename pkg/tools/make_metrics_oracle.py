"""Regenerate tests/data/metrics_oracle.json.

The expected values are produced by the brute-force oracle below, written
independently of g2tpipe.metrics: its own tokenizer construction, explicit
position loops instead of Counters, and exact Fraction arithmetic until the
final geometric mean. Run from the repository root:

    python tools/make_metrics_oracle.py
"""

from __future__ import annotations

import json
import math
import re
import sys
import unicodedata
from fractions import Fraction
from pathlib import Path

# --- independent tokenizer (punctuation/symbol split, digit-flanked
# punctuation kept attached, case preserved) -------------------------------


def _category_class(prefixes: tuple[str, ...]) -> str:
    chars = [
        chr(cp)
        for cp in range(sys.maxunicode + 1)
        if unicodedata.category(chr(cp)).startswith(prefixes)
    ]
    return re.escape("".join(chars))


def oracle_tokenize(line: str) -> list[str]:
    punct = _category_class(("P",))
    symbol = _category_class(("S",))
    line = re.sub(f"([^\\d])([{punct}])", r"\1 \2 ", line)
    line = re.sub(f"([{punct}])([^\\d])", r" \1 \2", line)
    line = re.sub(f"([{symbol}])", r" \1 ", line)
    return line.split()


# --- brute-force corpus BLEU-4 ---------------------------------------------


def _clipped_matches(hyp: list[str], ref: list[str], n: int) -> tuple[int, int]:
    spans = [tuple(hyp[i : i + n]) for i in range(len(hyp) - n + 1)]
    ref_spans = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    matched = 0
    for span in set(spans):
        matched += min(spans.count(span), ref_spans.count(span))
    return matched, len(spans)


def oracle_bleu(hypotheses: list[str], references: list[str]) -> float:
    correct = [0] * 4
    total = [0] * 4
    hyp_len = ref_len = 0
    for hyp_line, ref_line in zip(hypotheses, references):
        hyp = oracle_tokenize(hyp_line)
        ref = oracle_tokenize(ref_line)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in (1, 2, 3, 4):
            matched, seen = _clipped_matches(hyp, ref, n)
            correct[n - 1] += matched
            total[n - 1] += seen
    if hyp_len == 0:
        return 0.0
    precisions: list[Fraction] = []
    halvings = 0
    for n in (1, 2, 3, 4):
        if total[n - 1] == 0:
            return 0.0
        if correct[n - 1] == 0:
            halvings += 1
            precisions.append(Fraction(1, 2**halvings * total[n - 1]))
        else:
            precisions.append(Fraction(correct[n - 1], total[n - 1]))
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1 - ref_len / hyp_len)
    geo_mean = math.exp(sum(math.log(float(p)) for p in precisions) / 4)
    return 100.0 * brevity * geo_mean


# --- brute-force corpus chrF++ ---------------------------------------------


def _peel_punct(line: str) -> list[str]:
    import string

    out = []
    for word in line.split():
        if len(word) > 1 and word[-1] in string.punctuation:
            out += [word[:-1], word[-1]]
        elif len(word) > 1 and word[0] in string.punctuation:
            out += [word[0], word[1:]]
        else:
            out.append(word)
    return out


def _gram_list(seq, n):
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


def oracle_chrf_pp(hypotheses: list[str], references: list[str]) -> float:
    orders: list[dict[str, int]] = [
        {"hyp": 0, "ref": 0, "match": 0} for _ in range(8)
    ]  # 6 char + 2 word
    for hyp_line, ref_line in zip(hypotheses, references):
        hyp_chars = list("".join(hyp_line.split()))
        ref_chars = list("".join(ref_line.split()))
        hyp_words = _peel_punct(hyp_line)
        ref_words = _peel_punct(ref_line)
        sides = [(hyp_chars, ref_chars, n, n - 1) for n in range(1, 7)]
        sides += [(hyp_words, ref_words, n, 5 + n) for n in (1, 2)]
        for hyp_seq, ref_seq, n, slot in sides:
            hyp_grams = _gram_list(hyp_seq, n)
            ref_grams = _gram_list(ref_seq, n)
            matched = 0
            for gram in set(hyp_grams):
                matched += min(hyp_grams.count(gram), ref_grams.count(gram))
            orders[slot]["hyp"] += len(hyp_grams)
            orders[slot]["ref"] += len(ref_grams)
            orders[slot]["match"] += matched
    precision = Fraction(0)
    recall = Fraction(0)
    included = 0
    for order in orders:
        if order["hyp"] == 0 and order["ref"] == 0:
            continue
        precision += Fraction(order["match"], order["hyp"]) if order["hyp"] else Fraction(0)
        recall += Fraction(order["match"], order["ref"]) if order["ref"] else Fraction(0)
        included += 1
    if included == 0:
        return 0.0
    precision /= included
    recall /= included
    denominator = 4 * precision + recall
    if denominator == 0:
        return 0.0
    return float(100 * 5 * precision * recall / denominator)


# --- fixture corpus ---------------------------------------------------------

SUBJECTS = [
    "Arros negre", "The Ataturk Monument", "Aarhus Airport", "Piano Sonata No. 2",
    "The Eiffel Tower", "Dübs crane tank", "Mount Fuji", "The 1921 census",
    "Hessarghatta Main Road", "Doña Ana County",
]
VERBS = ["is located in", "was designed by", "serves", "borders", "commemorates"]
OBJECTS = [
    "Spain", "İzmir", "central Denmark", "a music composition", "Paris – France",
    "the Rakaia River", "Japan's main island", "roughly 12,500 people",
    "Bangalore – 560090", "New Mexico, United States",
]
TAILS = [
    "It opened in 1932.", "Construction finished on October 21, 1967.",
    "The structure cost $1,750,000.", "Its height is 324 m.",
    "Visitors arrived from 1899 to 1965.",
]


def build_corpus(n: int = 50) -> tuple[list[str], list[str]]:
    hypotheses, references = [], []
    for i in range(n):
        subject = SUBJECTS[i % len(SUBJECTS)]
        verb = VERBS[i % len(VERBS)]
        other_verb = VERBS[(i + 2) % len(VERBS)]
        obj = OBJECTS[i % len(OBJECTS)]
        other_obj = OBJECTS[(i + 3) % len(OBJECTS)]
        tail = TAILS[i % len(TAILS)]
        references.append(f"{subject} {verb} {obj}. {tail}")
        if i % 3 == 0:
            hypotheses.append(f"{subject} {verb} {obj}. {tail}")
        elif i % 3 == 1:
            hypotheses.append(f"{subject} {other_verb} {obj}, {tail}")
        else:
            hypotheses.append(f"{subject} {verb} {other_obj}. Nearby, {tail}")
    return hypotheses, references


def main() -> None:
    hypotheses, references = build_corpus()
    fixture = {
        "description": "50-pair corpus with oracle BLEU and chrF++ values; "
        "regenerate with tools/make_metrics_oracle.py",
        "hypotheses": hypotheses,
        "references": references,
        "bleu": round(oracle_bleu(hypotheses, references), 6),
        "chrf_pp": round(oracle_chrf_pp(hypotheses, references), 6),
    }
    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "metrics_oracle.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixture, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}: bleu={fixture['bleu']} chrf_pp={fixture['chrf_pp']}")


if __name__ == "__main__":
    main()
