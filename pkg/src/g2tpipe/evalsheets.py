"""Stratified qualitative-evaluation sheets, the judge prompt, and
aggregation of annotations into unused-triplet / unguessable-text ratios."""

from __future__ import annotations

import csv
import json
import logging
import random
import re
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .data_files import package_text
from .graphs import GraphTextPair, TripletSet, linearize, parse_triplets

logger = logging.getLogger(__name__)

#: Triplet-count strata: (low, high) ranges, high None meaning unbounded.
DEFAULT_STRATA: tuple[tuple[int, int | None], ...] = ((1, 1), (2, 2), (3, 3), (4, 5), (6, None))


def stratum_label(low: int, high: int | None) -> str:
    if high is None:
        return f"{low}+"
    if low == high:
        return str(low)
    return f"{low}-{high}"


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    graph: TripletSet
    text: str
    stratum: str


@dataclass(frozen=True)
class EvalSheet:
    dataset_id: str
    items: tuple[EvalItem, ...]
    strata: tuple[tuple[int, int | None], ...]
    quota: int
    seed: int
    shortfalls: dict = field(default_factory=dict)

    def item(self, item_id: str) -> EvalItem:
        for candidate in self.items:
            if candidate.item_id == item_id:
                return candidate
        raise KeyError(f"unknown sheet item {item_id!r}")


@dataclass(frozen=True)
class Annotation:
    """One evaluator's judgment of one sheet item.

    ``unused_triplet_indices`` are 0-based positions into the item's graph;
    ``unguessable_spans`` are half-open character ranges into the text.
    """

    item_id: str
    evaluator_id: str
    unused_triplet_indices: frozenset
    unguessable_spans: tuple


def _stratum_of(size: int, strata: Sequence[tuple[int, int | None]]) -> int | None:
    for index, (low, high) in enumerate(strata):
        if size >= low and (high is None or size <= high):
            return index
    return None


def stratified_sample(
    pairs: Sequence[GraphTextPair],
    quota: int,
    seed: int,
    dataset_id: str = "dataset",
    strata: Sequence[tuple[int, int | None]] = DEFAULT_STRATA,
) -> EvalSheet:
    """Sample ``quota`` items per triplet-count stratum without replacement.

    Strata too small to meet their quota borrow evenly from the nearest
    neighboring strata and the shortfall is logged. The combined sheet is
    shuffled deterministically by the seed.
    """
    buckets: list[list[GraphTextPair]] = [[] for _ in strata]
    for pair in pairs:
        index = _stratum_of(len(pair.graph), strata)
        if index is not None:
            buckets[index].append(pair)

    total_quota = quota * len(strata)
    pool_size = sum(len(b) for b in buckets)
    if pool_size < total_quota:
        raise ValueError(
            f"pool of {pool_size} pairs cannot fill {total_quota} sheet slots"
        )

    rng = random.Random(seed)
    labels = [stratum_label(low, high) for low, high in strata]
    selected: list[tuple[GraphTextPair, str]] = []
    leftovers: list[list[GraphTextPair]] = []
    shortfalls: dict[str, int] = {}

    for index, bucket in enumerate(buckets):
        take = min(quota, len(bucket))
        picked = rng.sample(bucket, take)
        picked_ids = {p.sentence_id for p in picked}
        selected.extend((pair, labels[index]) for pair in picked)
        rest = [p for p in bucket if p.sentence_id not in picked_ids]
        rng.shuffle(rest)
        leftovers.append(rest)
        if take < quota:
            shortfalls[labels[index]] = quota - take

    for index, bucket in enumerate(buckets):
        deficit = shortfalls.get(labels[index], 0)
        distance = 1
        while deficit > 0 and distance < len(strata):
            for neighbor in (index - distance, index + distance):
                if deficit == 0 or not 0 <= neighbor < len(strata):
                    continue
                while deficit > 0 and leftovers[neighbor]:
                    selected.append((leftovers[neighbor].pop(), labels[neighbor]))
                    deficit -= 1
            distance += 1

    for label, count in shortfalls.items():
        logger.warning(
            "stratum %s short by %d items; borrowed from neighboring strata", label, count
        )

    rng.shuffle(selected)
    items = tuple(
        EvalItem(pair.sentence_id, pair.graph, pair.text, label) for pair, label in selected
    )
    return EvalSheet(dataset_id, items, tuple(strata), quota, seed, shortfalls)


_JUDGE_TEMPLATE = package_text("judge_prompt.txt")


def build_judge_prompt(item: EvalItem) -> str:
    """Render the validation prompt for one item: numbered triplet lines,
    the text, and the two empty error fields at the end."""
    triplet_block = "\n".join(
        f"{number}. {linearize(TripletSet((triplet,)))}"
        for number, triplet in enumerate(item.graph, start=1)
    )
    return _JUDGE_TEMPLATE.format(triplet_block=triplet_block, text=item.text)


_UNUSED_RE = re.compile(r"\[Unused Triplets\]:\s*(.*)")
_UNGUESSABLE_RE = re.compile(r"\[Unguessable Text\]:\s*(.*)")


def parse_judge_response(response: str, item: EvalItem, evaluator_id: str = "judge") -> Annotation:
    """Recover triplet indices and character spans from a filled response.

    Triplet numbers are 1-based in the response; fragments are matched to
    their first occurrence in the item text, and unmatched fragments are
    dropped with a warning.
    """
    # judges sometimes echo the prompt, whose own field lines are empty, so
    # the last occurrence of each field is the answer
    indices: set[int] = set()
    unused_matches = list(_UNUSED_RE.finditer(response))
    if unused_matches:
        body = unused_matches[-1].group(1).strip()
        if body and body.lower() != "none":
            for piece in body.split(","):
                piece = piece.strip().rstrip(".")
                if piece.isdigit() and 1 <= int(piece) <= len(item.graph):
                    indices.add(int(piece) - 1)

    spans: list[tuple[int, int]] = []
    unguessable_matches = list(_UNGUESSABLE_RE.finditer(response))
    if unguessable_matches:
        body = unguessable_matches[-1].group(1).strip()
        if body and body.lower() != "none":
            for fragment in re.findall(r'"([^"]+)"', body):
                at = item.text.find(fragment)
                if at < 0:
                    logger.warning("fragment %r not found in item %s", fragment, item.item_id)
                    continue
                spans.append((at, at + len(fragment)))

    return Annotation(item.item_id, evaluator_id, frozenset(indices), tuple(spans))


def merge_spans(spans: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge overlapping or touching half-open spans."""
    ordered = sorted((s, e) for s, e in spans if e > s)
    merged: list[tuple[int, int]] = []
    for start, end in ordered:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def round2(value: float) -> float:
    return float(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-evaluator ratios (percent) with mean and sample (n-1) standard
    deviation across evaluators."""

    evaluator_unused_pct: dict
    evaluator_unguessable_pct: dict
    unused_mean: float
    unused_std: float | None
    unguessable_mean: float
    unguessable_std: float | None
    text_unit: str

    def to_dict(self) -> dict:
        return {
            "per_evaluator": {
                evaluator: {
                    "unused_triplet_pct": round2(self.evaluator_unused_pct[evaluator]),
                    "unguessable_text_pct": round2(self.evaluator_unguessable_pct[evaluator]),
                }
                for evaluator in sorted(self.evaluator_unused_pct)
            },
            "unused_triplet_mean": round2(self.unused_mean),
            "unused_triplet_std": None if self.unused_std is None else round2(self.unused_std),
            "unguessable_text_mean": round2(self.unguessable_mean),
            "unguessable_text_std": None if self.unguessable_std is None else round2(self.unguessable_std),
            "text_unit": self.text_unit,
        }


def summarize_ratios(ratios: Sequence[float]) -> tuple[float, float | None]:
    """Mean and sample (n-1) standard deviation, rounded to 2 decimals
    (half-up). Std is None for fewer than two values."""
    mean = round2(sum(ratios) / len(ratios))
    std = round2(statistics.stdev(ratios)) if len(ratios) >= 2 else None
    return mean, std


def _span_measure(item: EvalItem, spans: Sequence[tuple[int, int]], unit: str) -> tuple[float, float]:
    merged = merge_spans(spans)
    if unit == "chars":
        return float(sum(end - start for start, end in merged)), float(len(item.text))
    if unit == "words":
        marked = sum(len(item.text[start:end].split()) for start, end in merged)
        return float(marked), float(len(item.text.split()))
    raise ValueError(f"unknown text unit {unit!r}")


def aggregate_annotations(
    annotations: Sequence[Annotation], sheet: EvalSheet, text_unit: str = "chars"
) -> ConsistencyReport:
    """Aggregate annotations into per-evaluator ratios and their mean/std.

    Per evaluator, the unused-triplet ratio is total marked triplets over
    total triplets of the annotated items; the unguessable ratio is total
    merged span length over total text length (characters by default, words
    behind the flag). Evaluators with no annotations are excluded with a
    warning.
    """
    items_by_id = {item.item_id: item for item in sheet.items}
    by_evaluator: dict[str, list[Annotation]] = {}
    for annotation in annotations:
        if annotation.item_id not in items_by_id:
            raise KeyError(f"annotation references unknown sheet item {annotation.item_id!r}")
        by_evaluator.setdefault(annotation.evaluator_id, []).append(annotation)

    unused_pct: dict[str, float] = {}
    unguessable_pct: dict[str, float] = {}
    for evaluator, own in sorted(by_evaluator.items()):
        if not own:
            logger.warning("evaluator %s has no annotated items; excluded", evaluator)
            continue
        marked_triplets = 0
        total_triplets = 0
        marked_text = 0.0
        total_text = 0.0
        for annotation in own:
            item = items_by_id[annotation.item_id]
            for triplet_index in annotation.unused_triplet_indices:
                if not 0 <= triplet_index < len(item.graph):
                    raise ValueError(
                        f"annotation for {item.item_id} marks triplet {triplet_index} out of range"
                    )
            for start, end in annotation.unguessable_spans:
                if not 0 <= start <= end <= len(item.text):
                    raise ValueError(
                        f"annotation for {item.item_id} marks span ({start}, {end}) "
                        f"outside the {len(item.text)}-character text"
                    )
            marked_triplets += len(annotation.unused_triplet_indices)
            total_triplets += len(item.graph)
            marked, total = _span_measure(item, annotation.unguessable_spans, text_unit)
            marked_text += marked
            total_text += total
        unused_pct[evaluator] = 100.0 * marked_triplets / total_triplets if total_triplets else 0.0
        unguessable_pct[evaluator] = 100.0 * marked_text / total_text if total_text else 0.0

    if not unused_pct:
        raise ValueError("no usable annotations to aggregate")

    evaluators = sorted(unused_pct)
    unused_mean, unused_std = summarize_ratios([unused_pct[e] for e in evaluators])
    unguessable_mean, unguessable_std = summarize_ratios([unguessable_pct[e] for e in evaluators])
    return ConsistencyReport(
        unused_pct, unguessable_pct, unused_mean, unused_std, unguessable_mean, unguessable_std, text_unit
    )


# --- CSV interchange -------------------------------------------------------

SHEET_FIELDS = ["item_id", "dataset_id", "stratum", "triplet_count", "triplets", "text"]
ANNOTATION_FIELDS = ["item_id", "evaluator_id", "unused_triplet_indices", "unguessable_spans"]


def write_sheet_csv(sheet: EvalSheet, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SHEET_FIELDS)
        for item in sheet.items:
            writer.writerow(
                [item.item_id, sheet.dataset_id, item.stratum, len(item.graph), linearize(item.graph), item.text]
            )


def read_sheet_csv(path: str | Path) -> EvalSheet:
    items = []
    dataset_id = "dataset"
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            dataset_id = row["dataset_id"]
            items.append(
                EvalItem(row["item_id"], parse_triplets(row["triplets"]), row["text"], row["stratum"])
            )
    return EvalSheet(dataset_id, tuple(items), DEFAULT_STRATA, 0, 0)


def write_annotations_csv(annotations: Iterable[Annotation], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        for annotation in annotations:
            writer.writerow(
                [
                    annotation.item_id,
                    annotation.evaluator_id,
                    json.dumps(sorted(annotation.unused_triplet_indices)),
                    json.dumps([list(span) for span in annotation.unguessable_spans]),
                ]
            )


def read_annotations_csv(path: str | Path) -> list[Annotation]:
    annotations = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            annotations.append(
                Annotation(
                    row["item_id"],
                    row["evaluator_id"],
                    frozenset(json.loads(row["unused_triplet_indices"])),
                    tuple(tuple(span) for span in json.loads(row["unguessable_spans"])),
                )
            )
    return annotations
