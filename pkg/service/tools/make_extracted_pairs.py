"""Regenerate service/tests/data/extracted_pairs.jsonl.

Builds a 1000-article synthetic corpus with canned extraction completions
(mostly faithful, ~2 percent deliberately misaligned, occasional prose-
wrapped completions), then drives the pipeline's own `ingest` and `extract`
commands over the documented file schemas to produce the pair records the
service tests score. Run from the repository root:

    python service/tools/make_extracted_pairs.py
"""

from __future__ import annotations

import json
import random
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

NAMES = ["Alan Shepard", "Julia Morgan", "Ada Lovelace", "Edmund Hillary", "Marie Curie",
         "Grace Hopper", "Leonhard Euler", "Frida Kahlo", "Isamu Noguchi", "Wangari Maathai"]
CITIES = ["Aarhus", "Bangalore", "San Francisco", "Izmir", "Wellington", "Lagos",
          "Porto", "Sapporo", "Tromso", "Cusco"]
COUNTRIES = ["Denmark", "India", "United States", "Turkey", "New Zealand", "Nigeria",
             "Portugal", "Japan", "Norway", "Peru"]
THINGS = ["museum", "lighthouse", "observatory", "fortress", "library", "aqueduct",
          "monastery", "windmill", "planetarium", "arboretum"]
DISHES = ["Arros negre", "Bacalhau", "Okonomiyaki", "Jollof rice", "Ceviche",
          "Smorrebrod", "Menemen", "Hangi", "Caldo verde", "Kumara pie"]
INGREDIENTS = ["squid ink", "salted cod", "cabbage", "long-grain rice", "lime juice",
               "rye bread", "tomatoes", "sweet potato", "kale", "coconut milk"]
YEARS = ["1891", "1907", "1923", "1948", "1955", "1969", "1972", "1984", "1991", "2003"]
DATES = ["November 18, 1923", "March 2, 1931", "July 14, 1889", "October 21, 1967",
         "January 5, 1942", "April 30, 1975", "June 11, 1908", "May 23, 1996",
         "August 9, 1919", "February 17, 1954"]


def build_rows(n: int = 1000, seed: int = 2024) -> list[tuple[str, str]]:
    rng = random.Random(seed)
    rows: list[tuple[str, str]] = []
    for i in range(n):
        name = rng.choice(NAMES)
        city, city2 = rng.sample(CITIES, 2)
        country = rng.choice(COUNTRIES)
        thing = rng.choice(THINGS)
        dish = rng.choice(DISHES)
        ingredient = rng.choice(INGREDIENTS)
        year = rng.choice(YEARS)
        date = rng.choice(DATES)
        template = i % 6
        if template == 0:
            text = f"{name} was born in {city} on {date}."
            completion = (
                f"(<S> {name}| <P> birth Place| <O> {city}), "
                f"(<S> {name}| <P> birth Date| <O> {date})"
            )
        elif template == 1:
            text = f"The {thing} of {city} stands in {country}."
            completion = (
                f"(<S> {thing} of {city}| <P> location| <O> {city}), "
                f"(<S> {city}| <P> country| <O> {country})"
            )
        elif template == 2:
            text = f"{dish} is a traditional dish made with {ingredient}."
            completion = f"(<S> {dish}| <P> main Ingredient| <O> {ingredient})"
        elif template == 3:
            text = f"{name} founded the {thing} of {city} in {year}."
            completion = (
                f"(<S> {thing} of {city}| <P> founder| <O> {name}), "
                f"(<S> {thing} of {city}| <P> founding Year| <O> {year})"
            )
        elif template == 4:
            text = f"{city} Airport serves the city of {city} in {country}."
            completion = (
                f"(<S> {city} Airport| <P> city Served| <O> {city}), "
                f"(<S> {city} Airport| <P> country| <O> {country})"
            )
        else:
            text = f"The {city} river flows through {city2} and reaches {country}."
            completion = (
                f"(<S> {city} river| <P> flows Through| <O> {city2}), "
                f"(<S> {city} river| <P> mouth| <O> {country})"
            )

        if i % 50 == 17:
            # emulate a misextraction: graph about unrelated entities
            completion = "(<S> Banana| <P> color| <O> Yellow), (<S> Moon| <P> made Of| <O> Cheese)"
        elif i % 97 == 3:
            completion = "Sure, here are the triplets: " + completion

        rows.append((text + " Extra tail sentence follows.", completion))
    return rows


def main() -> None:
    repo = Path(__file__).resolve().parents[2]
    out_path = repo / "service" / "tests" / "data" / "extracted_pairs.jsonl"
    rows = build_rows()
    with tempfile.TemporaryDirectory() as td:
        tmp = Path(td)
        articles = tmp / "articles.jsonl"
        articles.write_text(
            "".join(
                json.dumps({"id": f"s{i:04d}", "title": "", "text": body}, ensure_ascii=False) + "\n"
                for i, (body, _) in enumerate(rows)
            ),
            encoding="utf-8",
        )
        sentences = tmp / "sentences.jsonl"
        subprocess.run(
            [sys.executable, "-m", "g2tpipe.cli", "ingest", "--input", str(articles),
             "--out", str(sentences)],
            check=True,
        )
        sentence_records = [json.loads(line) for line in sentences.read_text(encoding="utf-8").splitlines()]
        assert len(sentence_records) == len(rows), "every synthetic sentence must pass ingest"

        replay = tmp / "replay.jsonl"
        replay.write_text(
            "".join(
                json.dumps({"sentence_id": record["sentence_id"], "completion": completion},
                           ensure_ascii=False) + "\n"
                for record, (_, completion) in zip(sentence_records, rows)
            ),
            encoding="utf-8",
        )
        extract_dir = tmp / "extracted"
        subprocess.run(
            [sys.executable, "-m", "g2tpipe.cli", "extract", "--sentences", str(sentences),
             "--replay", str(replay), "--out-dir", str(extract_dir), "--parallelism", "4"],
            check=True,
        )
        pairs = extract_dir / "pairs.jsonl"
        count = sum(1 for _ in open(pairs, encoding="utf-8"))
        assert count == len(rows), f"expected {len(rows)} pairs, got {count}"
        out_path.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(pairs, out_path)
    print(f"wrote {out_path} ({count} pairs)")


if __name__ == "__main__":
    main()
