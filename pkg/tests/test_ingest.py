from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2tpipe.ingest import (
    ArticleRecord,
    IngestConfig,
    IngestError,
    RejectReason,
    SourceSentence,
    apply_constraints,
    ingest_stream,
    read_articles_jsonl,
    read_articles_textdir,
    split_first_sentence,
    strip_parentheticals,
)


class TestSplitFirstSentence:
    def test_single_terminator(self):
        body = "Paris is the capital of France. It lies on the Seine."
        assert split_first_sentence(body) == "Paris is the capital of France."

    def test_truncation_when_guard_disabled(self):
        body = (
            "Piano Sonata No. 1, the default title for a composer's first "
            "(or only) piano sonata, may refer to:"
        )
        assert split_first_sentence(body, abbreviation_guard=False) == "Piano Sonata No."
        # with the guard on, nothing upstream of the colon terminates
        assert split_first_sentence(body) is None

    def test_no_terminator(self):
        assert split_first_sentence("no terminator here") is None

    def test_guard_skips_abbreviation_then_finds_real_end(self):
        body = "Dr. Smith founded the clinic. It opened in 1920."
        assert split_first_sentence(body) == "Dr. Smith founded the clinic."

    def test_terminator_run_kept_whole(self):
        assert split_first_sentence("Really?! Yes. More.") == "Really?!"

    def test_terminator_at_end_of_body(self):
        assert split_first_sentence("One sentence only.") == "One sentence only."

    def test_exclamation_not_guarded(self):
        assert split_first_sentence("No! Wait for me.") == "No!"


class TestStripParentheticals:
    def test_single_group(self):
        assert strip_parentheticals("Lionel Messi (born 1987) is a footballer.") == (
            "Lionel Messi is a footballer.",
            False,
        )

    def test_nested_groups(self):
        assert strip_parentheticals("A (b (c) d) e") == ("A e", False)

    def test_unbalanced_opener_truncates_and_flags(self):
        assert strip_parentheticals("A (b c") == ("A", True)

    def test_unbalanced_closer_dropped_and_flagged(self):
        cleaned, flagged = strip_parentheticals("a) b")
        assert cleaned == "a b"
        assert flagged

    def test_result_never_contains_parens(self):
        for raw in ["x (a(b)c) y (d", "((()))", "a)b(c"]:
            cleaned, _ = strip_parentheticals(raw)
            assert "(" not in cleaned and ")" not in cleaned


class TestApplyConstraints:
    def test_pronoun_initial_rejected(self):
        assert apply_constraints("It is a town in France.", "a1") is RejectReason.PRONOUN_INITIAL

    def test_that_initial_rejected_case_insensitive(self):
        assert apply_constraints("THAT was unexpected news.", "a1") is RejectReason.PRONOUN_INITIAL

    def test_too_short_boundary(self):
        assert apply_constraints("Too short", "a1") is RejectReason.TOO_SHORT  # 9 chars
        accepted = apply_constraints("Oneacharz.", "a1")  # 10 chars
        assert isinstance(accepted, SourceSentence)

    def test_too_long_boundary(self):
        base = "Paris is nice and "
        text_500 = (base * 40)[:499] + "."
        assert isinstance(apply_constraints(text_500, "a1"), SourceSentence)
        text_501 = (base * 40)[:500] + "."
        assert apply_constraints(text_501, "a1") is RejectReason.TOO_LONG

    def test_accepts_plain_sentence(self):
        sentence = apply_constraints("Paris is the capital of France.", "a1")
        assert isinstance(sentence, SourceSentence)
        assert sentence.char_len == len("Paris is the capital of France.")
        assert sentence.article_id == "a1"

    def test_char_len_counts_scalars_not_bytes(self):
        text = "Dübs crane tank Nr. fünf."  # multibyte chars
        sentence = apply_constraints(text, "a1")
        assert sentence.char_len == len(text) < len(text.encode("utf-8"))


def articles(*bodies: str) -> list[ArticleRecord]:
    return [ArticleRecord(f"a{i}", f"t{i}", body) for i, body in enumerate(bodies)]


class TestIngestStream:
    def test_three_articles_one_pronoun_initial(self):
        stream, report = ingest_stream(
            articles(
                "Paris is the capital of France. More.",
                "It is a town in Normandy. More.",
                "Berlin is the capital of Germany. More.",
            )
        )
        sentences = list(stream)
        assert [s.text for s in sentences] == [
            "Paris is the capital of France.",
            "Berlin is the capital of Germany.",
        ]
        assert report.rejections == {"PronounInitial": 1}
        assert report.sentences_emitted == 2
        assert report.is_conserved()

    def test_empty_input(self):
        stream, report = ingest_stream([])
        assert list(stream) == []
        assert report.articles_seen == 0
        assert report.sentences_emitted == 0
        assert sum(report.rejections.values()) == 0

    def test_parens_only_body_rejected_as_empty_after_cleanup(self):
        stream, report = ingest_stream(articles("(only parens). Rest."))
        assert list(stream) == []
        assert report.rejections == {"EmptyAfterCleanup": 1}

    def test_sentence_truncated_inside_parens_is_empty_after_cleanup(self):
        stream, report = ingest_stream(articles("(Only parens in this body. Nothing else.)"))
        assert list(stream) == []
        assert report.rejections == {"EmptyAfterCleanup": 1}
        assert report.cleanup_flags == 1

    def test_deterministic(self):
        bodies = (
            "Paris is the capital of France. X.",
            "No sentence here",
            "It is rejected. X.",
            "A (b c",
            "Valid sentence number two. X.",
        )
        first = list(ingest_stream(articles(*bodies))[0])
        second = list(ingest_stream(articles(*bodies))[0])
        assert first == second

    def test_report_merge_is_commutative_and_associative(self):
        def report_for(*bodies):
            stream, report = ingest_stream(articles(*bodies))
            list(stream)
            return report

        r1 = report_for("Paris is a big city. X.")
        r2 = report_for("It is rejected. X.", "no end")
        r3 = report_for("(broken (parens. Rest.", "Berlin is a capital. X.")
        assert r1.merge(r2).to_dict() == r2.merge(r1).to_dict()
        assert r1.merge(r2).merge(r3).to_dict() == r1.merge(r2.merge(r3)).to_dict()


BODY_ALPHABET = st.characters(blacklist_categories=("Cs",))


@given(st.lists(st.text(alphabet=BODY_ALPHABET, max_size=300), max_size=20))
@settings(max_examples=200, deadline=None)
def test_emitted_sentences_satisfy_all_constraints(bodies):
    config = IngestConfig()
    stream, report = ingest_stream(
        [ArticleRecord(str(i), "", body) for i, body in enumerate(bodies)], config
    )
    emitted = list(stream)
    for sentence in emitted:
        assert 10 <= sentence.char_len <= 500
        assert "(" not in sentence.text and ")" not in sentence.text
        first = sentence.text.split()[0].strip("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
        assert first.casefold() not in config.blocked_pronouns
    # conservation: every article is accounted for exactly once
    assert report.articles_seen == len(bodies)
    assert report.is_conserved()
    assert report.sentences_emitted == len(emitted)


class TestReaders:
    def test_jsonl_reader(self, tmp_path):
        path = tmp_path / "articles.jsonl"
        rows = [
            {"id": "1", "title": "A", "text": "Alpha beta gamma. Rest."},
            {"id": "2", "title": "B", "text": "Second body here. Rest."},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        loaded = list(read_articles_jsonl(path))
        assert [a.article_id for a in loaded] == ["1", "2"]
        assert loaded[0].body == "Alpha beta gamma. Rest."

    def test_jsonl_reader_reports_byte_offset_on_garbage(self, tmp_path):
        path = tmp_path / "articles.jsonl"
        good = json.dumps({"id": "1", "title": "", "text": "Body one. Rest."})
        path.write_bytes((good + "\n{not json}\n").encode("utf-8"))
        reader = read_articles_jsonl(path)
        next(reader)
        with pytest.raises(IngestError, match=rf"byte offset {len(good) + 1}"):
            next(reader)

    def test_textdir_reader_ordered_by_filename(self, tmp_path):
        (tmp_path / "b.txt").write_text("Second doc sentence. X.", encoding="utf-8")
        (tmp_path / "a.txt").write_text("First doc sentence. X.", encoding="utf-8")
        loaded = list(read_articles_textdir(tmp_path))
        assert [a.article_id for a in loaded] == ["a", "b"]
