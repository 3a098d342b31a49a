"""JSONL persistence helpers and the stored record schemas.

Stored pair record: ``{"sentence_id", "text", "triplets": [{"s","p","o"}, ...]}``.
Scored records additionally carry ``"score"`` and ``"backend"``. Paths
ending in ``.gz`` are read and written gzip-compressed; compressed output
carries no timestamp or name header, so artifacts stay byte-reproducible.
"""

from __future__ import annotations

import gzip
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

from .graphs import GraphTextPair, Triplet, TripletSet


def dumps(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def iter_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    return list(iter_jsonl(path))


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    """Write records atomically (temp file + rename). Returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with open(tmp, "wb") as raw:
        if path.suffix == ".gz":
            compressor = gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0)
            fh = io.TextIOWrapper(compressor, encoding="utf-8")
        else:
            compressor = None
            fh = io.TextIOWrapper(raw, encoding="utf-8")
        for record in records:
            fh.write(dumps(record) + "\n")
            count += 1
        fh.flush()
        if compressor is not None:
            compressor.close()
        else:
            fh.detach()
        raw.flush()
        os.fsync(raw.fileno())
    os.replace(tmp, path)
    return count


def write_json(path: str | Path, payload: dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def pair_to_record(pair: GraphTextPair) -> dict[str, Any]:
    return {
        "sentence_id": pair.sentence_id,
        "text": pair.text,
        "triplets": [{"s": t.subject, "p": t.predicate, "o": t.object} for t in pair.graph],
    }


def pair_from_record(record: dict[str, Any]) -> GraphTextPair:
    triplets = TripletSet(
        tuple(Triplet(t["s"], t["p"], t["o"]) for t in record["triplets"])
    )
    return GraphTextPair(record["sentence_id"], triplets, record["text"])


@dataclass(frozen=True)
class ScoredPair:
    """A graph-text pair with its consistency score and scorer identity."""

    pair: GraphTextPair
    score: float
    backend: str

    def to_record(self) -> dict[str, Any]:
        record = pair_to_record(self.pair)
        record["score"] = self.score
        record["backend"] = self.backend
        return record

    @staticmethod
    def from_record(record: dict[str, Any]) -> "ScoredPair":
        return ScoredPair(pair_from_record(record), float(record["score"]), record["backend"])
