from __future__ import annotations

import random

import pytest

from qgqa_scorer.scorer import (
    SpanF1Scorer,
    best_window_f1,
    candidate_spans,
    parse_linearized,
    questions_from_graph,
    token_f1,
    tokens,
)


class TestParseLinearized:
    def test_single(self):
        assert parse_linearized("(<S> a| <P> b| <O> c)") == [("a", "b", "c")]

    def test_commas_inside_object(self):
        parsed = parse_linearized("(<S> a| <P> b| <O> c, with commas), (<S> d| <P> e| <O> f)")
        assert parsed == [("a", "b", "c, with commas"), ("d", "e", "f")]

    def test_garbage_yields_empty(self):
        assert parse_linearized("certainly! here is prose") == []

    def test_partially_malformed_keeps_good_prefix(self):
        parsed = parse_linearized("(<S> a| <P> b| <O> c), (<S> broken")
        assert parsed == [("a", "b", "c")]

    def test_never_raises_on_noise(self):
        rng = random.Random(7)
        alphabet = "(<S>|P O)ab, \x00é"
        for _ in range(500):
            raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
            parse_linearized(raw)  # must not raise


class TestPrimitives:
    def test_token_f1_exact(self):
        assert token_f1(("france",), ("france",)) == 1.0

    def test_token_f1_partial(self):
        assert token_f1(("new", "york"), ("new", "york", "city")) == pytest.approx(0.8)

    def test_best_window_finds_answer(self):
        text = tokens("The lighthouse of Porto stands in Portugal.")
        assert best_window_f1(text, tokens("Portugal")) == 1.0

    def test_best_window_zero_when_absent(self):
        text = tokens("Nothing relevant appears here.")
        assert best_window_f1(text, tokens("Portugal")) == 0.0

    def test_candidate_spans_skip_stopwords(self):
        spans = candidate_spans(tokens("Paris is the capital of France."))
        assert spans == [("paris",), ("capital",), ("france",)]

    def test_questions_cover_both_candidates(self):
        questions = questions_from_graph([("Paris", "capital Of", "France")])
        assert len(questions) == 2
        assert questions[0].expected == ("france",)
        assert questions[1].expected == ("paris",)


class TestScoreItem:
    def setup_method(self):
        self.scorer = SpanF1Scorer()

    def test_aligned_scores_high(self):
        value = self.scorer.score_item(
            "(<S> Paris| <P> capital Of| <O> France)", "Paris is the capital of France."
        )
        assert value > 0.8

    def test_unrelated_scores_low(self):
        value = self.scorer.score_item(
            "(<S> Paris| <P> capital Of| <O> France)", "Berlin has many museums and parks."
        )
        assert value < 0.2

    def test_exemplar_graph_prefers_its_own_text(self):
        graph = (
            "(<S> Albert Jennings Fountain| <P> death Place| <O> Doña Ana County, New Mexico), "
            "(<S> Albert Jennings Fountain| <P> birth Place| <O> New York City), "
            "(<S> Albert Jennings Fountain| <P> birth Place| <O> Staten Island)"
        )
        own_text = (
            "Albert Jennings Fountain was born in Staten Island in New York City "
            "and died in Dona Ana County, New Mexico."
        )
        unrelated = "The recipe calls for two cups of flour and a pinch of salt."
        assert self.scorer.score_item(graph, own_text) > self.scorer.score_item(graph, unrelated)

    def test_empty_text_scores_zero(self):
        assert self.scorer.score_item("(<S> a| <P> b| <O> c)", "") == 0.0
        assert self.scorer.score_item("(<S> a| <P> b| <O> c)", " .. ") == 0.0

    def test_deterministic(self):
        graph = "(<S> Ada Lovelace| <P> field| <O> mathematics)"
        text = "Ada Lovelace worked on early mathematics."
        assert self.scorer.score_item(graph, text) == self.scorer.score_item(graph, text)

    def test_range_on_arbitrary_inputs(self):
        rng = random.Random(99)
        alphabet = "ab (<S>|<P><O>),.é中\n\t"
        for _ in range(300):
            graph = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
            value = self.scorer.score_item(graph, text)
            assert 0.0 <= value <= 1.0
