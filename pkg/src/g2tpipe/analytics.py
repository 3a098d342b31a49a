"""Quantitative characterization of a pair dataset: headline statistics,
normalized triplet/word-count distributions, and the words-per-triplet slope.

Uniqueness of predicates and entities is counted over canonical surface
forms (case-folded, NFC, edge punctuation stripped), since datasets differ
in casing conventions.
"""

from __future__ import annotations

import csv
import json
import statistics
import unicodedata
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import records
from .graphs import GraphTextPair, Triplet, TripletSet, normalize_surface


@dataclass(frozen=True)
class DatasetStats:
    n_samples: int
    n_unique_predicates: int
    n_unique_entities: int
    triplets_min: int
    triplets_max: int
    triplets_avg: float

    def __post_init__(self) -> None:
        if not self.triplets_min <= self.triplets_avg <= self.triplets_max:
            raise ValueError("triplet average must lie between min and max")

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "n_unique_predicates": self.n_unique_predicates,
            "n_unique_entities": self.n_unique_entities,
            "triplets_min": self.triplets_min,
            "triplets_max": self.triplets_max,
            "triplets_avg": self.triplets_avg,
        }


@dataclass
class StatsAccumulator:
    """Mergeable partial aggregate for parallel partitioned runs."""

    n_samples: int = 0
    total_triplets: int = 0
    triplets_min: int | None = None
    triplets_max: int | None = None
    predicates: set = field(default_factory=set)
    entities: set = field(default_factory=set)

    def add(self, pair: GraphTextPair) -> None:
        size = len(pair.graph)
        self.n_samples += 1
        self.total_triplets += size
        self.triplets_min = size if self.triplets_min is None else min(self.triplets_min, size)
        self.triplets_max = size if self.triplets_max is None else max(self.triplets_max, size)
        for triplet in pair.graph:
            self.predicates.add(normalize_surface(triplet.predicate))
            self.entities.add(normalize_surface(triplet.subject))
            self.entities.add(normalize_surface(triplet.object))

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        merged = StatsAccumulator(
            n_samples=self.n_samples + other.n_samples,
            total_triplets=self.total_triplets + other.total_triplets,
        )
        mins = [m for m in (self.triplets_min, other.triplets_min) if m is not None]
        maxs = [m for m in (self.triplets_max, other.triplets_max) if m is not None]
        merged.triplets_min = min(mins) if mins else None
        merged.triplets_max = max(maxs) if maxs else None
        merged.predicates = self.predicates | other.predicates
        merged.entities = self.entities | other.entities
        return merged

    def finalize(self) -> DatasetStats:
        if self.n_samples == 0:
            raise ValueError("cannot compute statistics of an empty dataset")
        return DatasetStats(
            n_samples=self.n_samples,
            n_unique_predicates=len(self.predicates),
            n_unique_entities=len(self.entities),
            triplets_min=self.triplets_min,
            triplets_max=self.triplets_max,
            triplets_avg=round(self.total_triplets / self.n_samples, 2),
        )


def compute_stats(pairs: Iterable[GraphTextPair]) -> DatasetStats:
    accumulator = StatsAccumulator()
    for pair in pairs:
        accumulator.add(pair)
    return accumulator.finalize()


def word_count(text: str) -> int:
    """Whitespace token count after Unicode NFC normalization."""
    return len(unicodedata.normalize("NFC", text).split())


@dataclass(frozen=True)
class DistributionReport:
    """Normalized histograms plus the words-per-triplet trend.

    ``slope`` is the unweighted ordinary-least-squares slope over the
    (triplet count, mean words) points; None with fewer than two distinct
    triplet counts.
    """

    triplet_hist: dict
    word_hist: dict
    mean_words_by_count: dict
    slope: float | None
    word_bin_width: int = 5

    def to_dict(self) -> dict:
        return {
            "triplet_hist": {str(k): v for k, v in self.triplet_hist.items()},
            "word_hist": {str(k): v for k, v in self.word_hist.items()},
            "mean_words_by_count": {str(k): v for k, v in self.mean_words_by_count.items()},
            "slope": self.slope,
            "word_bin_width": self.word_bin_width,
            "slope_estimator": "unweighted OLS over per-count mean words",
        }


def build_distributions(
    pairs: Iterable[GraphTextPair], min_support: int = 1, word_bin_width: int = 5
) -> DistributionReport:
    triplet_counts: list[int] = []
    word_counts: list[int] = []
    words_by_count: dict[int, list[int]] = defaultdict(list)
    for pair in pairs:
        size = len(pair.graph)
        words = word_count(pair.text)
        triplet_counts.append(size)
        word_counts.append(words)
        words_by_count[size].append(words)

    n = len(triplet_counts)
    if n == 0:
        raise ValueError("cannot build distributions of an empty dataset")

    triplet_hist = {m: c / n for m, c in sorted(Counter(triplet_counts).items())}
    word_hist = {
        b: c / n for b, c in sorted(Counter(w // word_bin_width for w in word_counts).items())
    }
    mean_words = {
        m: sum(ws) / len(ws)
        for m, ws in sorted(words_by_count.items())
        if len(ws) >= min_support
    }

    slope = None
    if len(mean_words) >= 2:
        slope = statistics.linear_regression(list(mean_words), list(mean_words.values())).slope

    return DistributionReport(triplet_hist, word_hist, mean_words, slope, word_bin_width)


def write_distribution_csv(report: DistributionReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "key", "value"])
        for m, fraction in report.triplet_hist.items():
            writer.writerow(["triplet_fraction", m, fraction])
        for b, fraction in report.word_hist.items():
            low = b * report.word_bin_width
            writer.writerow(["word_bin_fraction", f"{low}-{low + report.word_bin_width - 1}", fraction])
        for m, mean in report.mean_words_by_count.items():
            writer.writerow(["mean_words", m, mean])
        writer.writerow(["slope", "", "" if report.slope is None else report.slope])


# --- dataset adapters ------------------------------------------------------
# Field maps:
#   native   JSONL {"sentence_id", "text", "triplets": [{"s","p","o"}]}
#   webnlg   XML entries; one sample per (entry, lex); graph from
#            modifiedtripleset mtriples "S | P | O"
#   genwiki  JSON list files {"text", "entities", "graph": [[s,p,o]]} with
#            <ENT_i> slots in text filled from entities
#   tekgen   JSONL {"triples": [{"subject","predicate","object"}], "sentence"}
#   lagrange JSONL {"graph" | "triplets": [[s,p,o]], "text"}


def _safe_pair(sentence_id: str, raw_triplets: list[tuple[str, str, str]], text: str) -> GraphTextPair | None:
    triplets = []
    for s, p, o in raw_triplets:
        try:
            triplets.append(Triplet(s, p, o))
        except ValueError:
            continue
    if not triplets or not text.strip():
        return None
    return GraphTextPair(sentence_id, TripletSet(tuple(triplets)), text)


def iter_pairs_native(path: str | Path) -> Iterator[GraphTextPair]:
    for record in records.iter_jsonl(path):
        yield records.pair_from_record(record)


def _webnlg_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    return sorted(path.rglob("*.xml"))


def iter_pairs_webnlg(path: str | Path) -> Iterator[GraphTextPair]:
    """One sample per (entry, lexicalization) pair, the convention under
    which per-dataset sample counts include every lexicalization."""
    for file in _webnlg_files(Path(path)):
        root = ET.parse(file).getroot()
        for entry in root.iter("entry"):
            eid = entry.get("eid", "e")
            category = entry.get("category", "")
            tripleset = entry.find("modifiedtripleset")
            if tripleset is None:
                continue
            raw = []
            for mtriple in tripleset.findall("mtriple"):
                parts = (mtriple.text or "").split(" | ")
                if len(parts) == 3:
                    raw.append(tuple(part.strip() for part in parts))
            for lex_index, lex in enumerate(entry.findall("lex")):
                text = (lex.text or "").strip()
                pair = _safe_pair(f"{file.stem}:{category}:{eid}:{lex_index}", raw, text)
                if pair is not None:
                    yield pair


def iter_pairs_genwiki(path: str | Path) -> Iterator[GraphTextPair]:
    base = Path(path)
    files = [base] if base.is_file() else sorted(base.rglob("*.json"))
    for file in files:
        entries = json.loads(file.read_text(encoding="utf-8"))
        for index, entry in enumerate(entries):
            text = entry["text"]
            for slot, value in enumerate(entry.get("entities", [])):
                text = text.replace(f"<ENT_{slot}>", value)
            raw = [tuple(t) for t in entry.get("graph", []) if len(t) == 3]
            pair = _safe_pair(f"{file.stem}:{index}", raw, text)
            if pair is not None:
                yield pair


def iter_pairs_tekgen(path: str | Path) -> Iterator[GraphTextPair]:
    for index, record in enumerate(records.iter_jsonl(path)):
        raw = [
            (t["subject"], t["predicate"], t["object"])
            for t in record.get("triples", [])
            if all(k in t for k in ("subject", "predicate", "object"))
        ]
        pair = _safe_pair(f"tekgen:{index}", raw, record.get("sentence", ""))
        if pair is not None:
            yield pair


def iter_pairs_lagrange(path: str | Path) -> Iterator[GraphTextPair]:
    for index, record in enumerate(records.iter_jsonl(path)):
        raw_lists = record.get("graph", record.get("triplets", []))
        raw = [tuple(t) for t in raw_lists if len(t) == 3]
        pair = _safe_pair(f"lagrange:{index}", raw, record.get("text", ""))
        if pair is not None:
            yield pair


PAIR_READERS = {
    "native": iter_pairs_native,
    "webnlg": iter_pairs_webnlg,
    "genwiki": iter_pairs_genwiki,
    "tekgen": iter_pairs_tekgen,
    "lagrange": iter_pairs_lagrange,
}
