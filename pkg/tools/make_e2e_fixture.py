"""Regenerate the 20-article end-to-end fixture and its replay completions.

Covers every rejection class at ingest, two extraction-failure modes, one
below-threshold pair, and twelve well-aligned pairs of varying graph size.
Run from the repository root:

    python tools/make_e2e_fixture.py
"""

from __future__ import annotations

import json
from pathlib import Path

from g2tpipe.ingest import IngestConfig, ingest_stream, ArticleRecord

GOOD = [
    # (article body, replay completion)
    ("Paris is the capital of France. It has museums.",
     "(<S> Paris| <P> capital Of| <O> France)"),
    ("Arros negre is a Spanish rice dish from Catalonia. Cooks love it.",
     "(<S> Arros negre| <P> dish Type| <O> Spanish rice dish), (<S> Arros negre| <P> region| <O> Catalonia)"),
    ("Mount Fuji is the highest mountain in Japan. Many climb it.",
     "Here are the triplets: (<S> Mount Fuji| <P> highest Mountain In| <O> Japan)"),
    ("Aarhus Airport serves the city of Aarhus in Denmark. It is small.",
     "(<S> Aarhus Airport| <P> city Served| <O> Aarhus), (<S> Aarhus Airport| <P> country| <O> Denmark)"),
    ("Julia Morgan was an architect born in San Francisco. She built much.",
     "(<S> Julia Morgan| <P> profession| <O> architect), (<S> Julia Morgan| <P> birth Place| <O> San Francisco)"),
    ("Double Hill Station lies up the Rakaia River in New Zealand. Sheep graze there.",
     "(<S> Double Hill Station| <P> location| <O> up the Rakaia River), (<S> Double Hill Station| <P> country| <O> New Zealand)"),
    ("Dennis Hamilton signed with the Lakers on October 21, 1967. He played forward.",
     "(<S> Dennis Hamilton| <P> signed With| <O> Lakers), (<S> Dennis Hamilton| <P> signed Date| <O> October 21, 1967)"),
    ("Abilene is a city in Jones County in Texas. Ranching thrives.",
     "(<S> Abilene| <P> is Part Of| <O> Jones County), (<S> Jones County| <P> state| <O> Texas)"),
    ("Asilomar Conference Grounds were designed by Julia Morgan. Guests gather yearly.",
     "(<S> Asilomar Conference Grounds| <P> architect| <O> Julia Morgan), (<S> Asilomar Conference Grounds| <P> location| <O> Pacific Grove), (<S> Julia Morgan| <P> birth Place| <O> San Francisco)"),
    ("Alan Shepard was born in New Hampshire on November 18, 1923. He flew twice.",
     "(<S> Alan Shepard| <P> birth Place| <O> New Hampshire), (<S> Alan Shepard| <P> birth Date| <O> November 18, 1923)"),
    ("Bananas are an excellent source of potassium for athletes. Trainers agree.",
     "(<S> Bananas| <P> nutrient| <O> potassium), (<S> Bananas| <P> consumer Group| <O> athletes)"),
    ("The Eiffel Tower stands in Paris and attracts millions of visitors annually. Lines are long.",
     "(<S> Eiffel Tower| <P> location| <O> Paris), (<S> Eiffel Tower| <P> visitors Per Year| <O> millions)"),
]

REJECTED_BODIES = [
    "It is a commune in northern France. Farmers live there.",  # PronounInitial
    "(only parens). Rest of body.",                             # EmptyAfterCleanup
    "no terminator in this body at all",                        # NoSentenceFound
    "Tiny one. This body continues afterwards.",                # TooShort (9 chars)
    ("Aa " * 200).strip() + " end. Tail.",                      # TooLong (> 500 chars)
]

FAILING = [
    ("Glass sculptures shimmer beautifully under warm light. Buyers queue.",
     "I cannot produce that."),                                  # parse failure
    ("Copper wires conduct electricity across long distances. Grids rely on them.",
     ""),                                                        # empty completion
]

NOISE = [
    ("Quantum widgets hum softly near the reactor core. Nobody knows why.",
     "(<S> Banana| <P> color| <O> Yellow)"),                     # misaligned graph
]


def main() -> None:
    data_dir = Path(__file__).resolve().parent.parent / "tests" / "data"
    articles = []
    completions: dict[str, str] = {}

    bodies: list[tuple[str, str | None]] = [(b, c) for b, c in GOOD]
    bodies += [(b, None) for b in REJECTED_BODIES]
    bodies += [(b, c) for b, c in FAILING]
    bodies += [(b, c) for b, c in NOISE]
    assert len(bodies) == 20

    for i, (body, completion) in enumerate(bodies, start=1):
        article_id = f"a{i:02d}"
        articles.append({"id": article_id, "title": f"Article {i}", "text": body})
        if completion is None:
            continue
        stream, _ = ingest_stream(
            [ArticleRecord(article_id, "", body)], IngestConfig()
        )
        emitted = list(stream)
        assert emitted, f"article {article_id} unexpectedly rejected"
        completions[emitted[0].sentence_id] = completion

    articles_path = data_dir / "e2e_articles.jsonl"
    replay_path = data_dir / "e2e_replay.jsonl"
    articles_path.write_text(
        "".join(json.dumps(a, ensure_ascii=False) + "\n" for a in articles), encoding="utf-8"
    )
    replay_path.write_text(
        "".join(
            json.dumps({"sentence_id": sid, "completion": completion}, ensure_ascii=False) + "\n"
            for sid, completion in sorted(completions.items())
        ),
        encoding="utf-8",
    )
    print(f"wrote {articles_path} ({len(articles)} articles)")
    print(f"wrote {replay_path} ({len(completions)} completions)")


if __name__ == "__main__":
    main()
