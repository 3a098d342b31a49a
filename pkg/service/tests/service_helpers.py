"""Loaders shared by the service test modules."""

from __future__ import annotations

import json
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[2]
DATA_DIR = Path(__file__).parent / "data"


def load_wire_cases() -> dict:
    return json.loads(
        (REPO_ROOT / "fixtures" / "wire_protocol_cases.json").read_text(encoding="utf-8")
    )


def load_extracted_pairs() -> list[dict]:
    path = DATA_DIR / "extracted_pairs.jsonl"
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


def linearized(record: dict) -> str:
    return ", ".join(
        f"(<S> {t['s']}| <P> {t['p']}| <O> {t['o']})" for t in record["triplets"]
    )
