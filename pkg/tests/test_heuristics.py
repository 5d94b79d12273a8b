from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus_forge.heuristics import (
    HeuristicConfig,
    ParagraphPolicy,
    apply_heuristics,
    apply_heuristics_batch,
    banned_content_gate,
    doc_length_gate,
    paragraph_quality_gate,
)
from corpus_forge.records import Document, Reason

from fixture_docs import heuristic_fixture

CFG = HeuristicConfig()


def doc(text: str, doc_id: str = "t") -> Document:
    return Document(id=doc_id, text=text, language="en")


class TestLengthGate:
    def test_199_rejected(self):
        verdict = doc_length_gate(doc("x" * 199), CFG)
        assert not verdict.passed and verdict.reason is Reason.TOO_SHORT
        assert verdict.detail == 199

    def test_exactly_200_passes(self):
        assert doc_length_gate(doc("x" * 200), CFG).passed

    def test_empty_rejected(self):
        assert doc_length_gate(doc(""), CFG).reason is Reason.TOO_SHORT


class TestBannedGate:
    @pytest.mark.parametrize("text", [
        "prefix Lorem Ipsum dolor",
        "LOREM IPSUM",
        "uses JavaScript everywhere",
        "javascript",
        "code { block }",
        "just a stray } brace",
    ])
    def test_rejects(self, text):
        assert banned_content_gate(doc(text), CFG).reason is Reason.BANNED_PHRASE

    def test_passes_plain_prose(self):
        assert banned_content_gate(doc("plain prose with no banned tokens"), CFG).passed

    def test_curly_ban_can_be_disabled(self):
        cfg = HeuristicConfig(ban_curly_brackets=False)
        assert banned_content_gate(doc("a { b }"), cfg).passed


class TestParagraphGate:
    def test_all_caps_paragraph_removed(self):
        d = doc("THIS IS ALL CAPS TEXT\nnormal lowercase paragraph here")
        verdict, cleaned = paragraph_quality_gate(d, CFG)
        assert verdict.passed
        assert cleaned == "normal lowercase paragraph here"

    def test_exactly_40_percent_kept(self):
        d = doc("ABcde " * 10)  # 2 of 5 letters uppercase per word
        verdict, cleaned = paragraph_quality_gate(d, CFG)
        assert verdict.passed
        assert cleaned == d.text

    def test_all_paragraphs_removed_reports_first_reason(self):
        d = doc("ALL CAPS HERE\n\nnum 123 456 789 000")
        verdict, cleaned = paragraph_quality_gate(d, CFG)
        assert not verdict.passed
        assert verdict.reason is Reason.UPPERCASE_RATIO
        assert cleaned == ""

    def test_drop_document_policy(self):
        cfg = HeuristicConfig(paragraph_policy=ParagraphPolicy.DROP_DOCUMENT)
        d = doc("fine paragraph here\n\nSHOUTING PARAGRAPH")
        verdict, cleaned = paragraph_quality_gate(d, cfg)
        assert not verdict.passed and verdict.reason is Reason.UPPERCASE_RATIO
        assert cleaned == d.text

    def test_text_untouched_when_nothing_drops(self):
        d = doc("one fine paragraph\n\nanother fine paragraph")
        verdict, cleaned = paragraph_quality_gate(d, CFG)
        assert verdict.passed and cleaned == d.text


class TestFixtureCorpus:
    """The 20-document hand-labeled verdict table."""

    @pytest.mark.parametrize("case", heuristic_fixture(), ids=lambda c: c.doc.id)
    def test_verdict(self, case):
        verdict, cleaned = apply_heuristics(case.doc, CFG)
        assert verdict.passed == case.passed, (
            f"{case.doc.id}: expected passed={case.passed}, got {verdict}")
        assert verdict.reason is case.reason
        if case.passed:
            expected = case.cleaned_text if case.cleaned_text is not None else case.doc.text
            assert cleaned.text == expected

    def test_fixture_shape(self):
        cases = heuristic_fixture()
        assert len(cases) == 20
        assert sum(c.passed for c in cases) == 8


class TestApplyHeuristics:
    def test_order_length_before_banned(self):
        verdict, _ = apply_heuristics(doc("javascript " * 13), CFG)
        assert verdict.reason is Reason.TOO_SHORT

    def test_clean_doc_unchanged(self):
        text = ("a fine sentence with plain words " * 10).strip()
        verdict, out = apply_heuristics(doc(text), CFG)
        assert verdict.passed and out.text == text

    def test_idempotent_on_cleaned_output(self):
        cases = heuristic_fixture()
        for case in cases:
            verdict, cleaned = apply_heuristics(case.doc, CFG)
            if verdict.passed:
                second_verdict, second = apply_heuristics(cleaned, CFG)
                assert second_verdict.passed
                assert second.text == cleaned.text

    @given(st.text(max_size=400))
    @settings(max_examples=150)
    def test_deterministic_and_idempotent(self, text):
        d = doc(text)
        v1, out1 = apply_heuristics(d, CFG)
        v2, out2 = apply_heuristics(d, CFG)
        assert v1 == v2 and out1.text == out2.text
        if v1.passed:
            v3, out3 = apply_heuristics(out1, CFG)
            assert v3.passed and out3.text == out1.text

    @given(st.text(min_size=150, max_size=400), st.integers(0, 300))
    @settings(max_examples=100)
    def test_min_chars_monotonic(self, text, lower_min):
        """Raising min_chars never converts a reject into a pass."""
        lo = HeuristicConfig(min_chars=lower_min)
        hi = HeuristicConfig(min_chars=lower_min + 50)
        v_lo, _ = apply_heuristics(doc(text), lo)
        v_hi, _ = apply_heuristics(doc(text), hi)
        if not v_lo.passed and v_lo.reason is Reason.TOO_SHORT:
            assert not v_hi.passed

    def test_batch_matches_single_on_fixture(self):
        cases = heuristic_fixture()
        docs = [case.doc for case in cases]
        batched = apply_heuristics_batch(docs, CFG)
        singles = [apply_heuristics(d, CFG) for d in docs]
        assert [(v, d.text) for v, d in batched] == [(v, d.text) for v, d in singles]

    @given(st.lists(st.text(max_size=300), max_size=8))
    @settings(max_examples=150)
    def test_batch_matches_single(self, texts):
        docs = [doc(t, doc_id=str(i)) for i, t in enumerate(texts)]
        batched = apply_heuristics_batch(docs, CFG)
        singles = [apply_heuristics(d, CFG) for d in docs]
        assert [(v, d.text) for v, d in batched] == [(v, d.text) for v, d in singles]

    @given(st.text(min_size=200, max_size=400))
    @settings(max_examples=100)
    def test_ratio_thresholds_monotonic(self, text):
        """Lowering any ratio threshold never converts a reject into a pass."""
        base = HeuristicConfig()
        tight = HeuristicConfig(max_uppercase_fraction=0.2,
                                max_symbol_to_word=0.05,
                                max_nonalpha_word_fraction=0.1)
        v_base, _ = apply_heuristics(doc(text), base)
        if not v_base.passed:
            v_tight, _ = apply_heuristics(doc(text), tight)
            assert not v_tight.passed
