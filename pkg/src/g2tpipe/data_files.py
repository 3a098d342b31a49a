"""Access to the word lists and templates shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def package_text(name: str) -> str:
    return resources.files("g2tpipe.data").joinpath(name).read_text(encoding="utf-8")


def parse_wordlist(text: str) -> frozenset[str]:
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def load_wordlist(name: str) -> frozenset[str]:
    return parse_wordlist(package_text(name))


def load_wordlist_file(path: str | Path) -> frozenset[str]:
    return parse_wordlist(Path(path).read_text(encoding="utf-8"))
