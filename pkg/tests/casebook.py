"""Loaders for the scorer-replay casebook shared by several test modules."""

from __future__ import annotations

import json
from pathlib import Path

from g2tpipe.graphs import GraphTextPair, parse_triplets
from g2tpipe.records import ScoredPair

DATA_DIR = Path(__file__).parent / "data"


def load_casebook() -> list[dict]:
    return json.loads((DATA_DIR / "filter_casebook.json").read_text(encoding="utf-8"))["rows"]


def casebook_pairs() -> list[GraphTextPair]:
    return [
        GraphTextPair(row["sentence_id"], parse_triplets(row["graph"]), row["text"])
        for row in load_casebook()
    ]


def casebook_scored(backend: str = "remote:mock-replay") -> list[ScoredPair]:
    return [
        ScoredPair(pair, row["score"], backend)
        for pair, row in zip(casebook_pairs(), load_casebook())
    ]
