"""Web-data heuristic filters: document-level gates plus paragraph ratio gates.

All thresholds are strict inequalities; values exactly at a threshold pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .records import (
    Document,
    FilterVerdict,
    Reason,
    TextStats,
    paragraph_stats,
    paragraph_stats_batch,
)


class ParagraphPolicy(str, enum.Enum):
    DROP_PARAGRAPH = "DROP_PARAGRAPH"
    DROP_DOCUMENT = "DROP_DOCUMENT"


@dataclass
class HeuristicConfig:
    min_chars: int = 200
    banned_phrases: list[str] = field(default_factory=lambda: ["lorem ipsum", "javascript"])
    ban_curly_brackets: bool = True
    max_uppercase_fraction: float = 0.40
    max_symbol_to_word: float = 0.1
    max_nonalpha_word_fraction: float = 0.2
    paragraph_policy: ParagraphPolicy = ParagraphPolicy.DROP_PARAGRAPH

    def __post_init__(self) -> None:
        if self.min_chars < 0:
            raise ConfigError("min_chars must be >= 0")
        for name in ("max_uppercase_fraction", "max_nonalpha_word_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.max_symbol_to_word < 0:
            raise ConfigError("max_symbol_to_word must be >= 0")
        self.banned_phrases = [p.casefold() for p in self.banned_phrases]
        self.paragraph_policy = ParagraphPolicy(self.paragraph_policy)


def doc_length_gate(doc: Document, cfg: HeuristicConfig) -> FilterVerdict:
    """Reject documents with fewer than min_chars characters (strict)."""
    n = len(doc.text)
    if n < cfg.min_chars:
        return FilterVerdict.reject(Reason.TOO_SHORT, float(n))
    return FilterVerdict.ok()


def banned_content_gate(doc: Document, cfg: HeuristicConfig) -> FilterVerdict:
    """Reject documents containing a banned phrase or curly brackets.

    Phrase matching is substring over the case-folded text.
    """
    folded = doc.text.casefold()
    for phrase in cfg.banned_phrases:
        if phrase in folded:
            return FilterVerdict.reject(Reason.BANNED_PHRASE)
    if cfg.ban_curly_brackets and ("{" in doc.text or "}" in doc.text):
        return FilterVerdict.reject(Reason.BANNED_PHRASE)
    return FilterVerdict.ok()


def _paragraph_offence(stats: TextStats, cfg: HeuristicConfig) -> tuple[Reason, float] | None:
    if stats.uppercase_fraction > cfg.max_uppercase_fraction:
        return Reason.UPPERCASE_RATIO, stats.uppercase_fraction
    if stats.symbol_to_word > cfg.max_symbol_to_word:
        return Reason.SYMBOL_RATIO, stats.symbol_to_word
    if stats.nonalpha_word_fraction > cfg.max_nonalpha_word_fraction:
        return Reason.NONALPHA_RATIO, stats.nonalpha_word_fraction
    return None


def _evaluate_paragraphs(
    original_text: str,
    paragraphs: list[tuple[str, TextStats]],
    cfg: HeuristicConfig,
) -> tuple[FilterVerdict, str]:
    kept: list[str] = []
    first_offence: tuple[Reason, float] | None = None
    for paragraph, stats in paragraphs:
        offence = _paragraph_offence(stats, cfg)
        if offence is None:
            kept.append(paragraph)
            continue
        if cfg.paragraph_policy is ParagraphPolicy.DROP_DOCUMENT:
            return FilterVerdict.reject(*offence), original_text
        if first_offence is None:
            first_offence = offence
    if first_offence is None:
        return FilterVerdict.ok(), original_text
    if not kept and paragraphs:
        return FilterVerdict.reject(*first_offence), ""
    return FilterVerdict.ok(), "\n".join(kept)


def paragraph_quality_gate(doc: Document, cfg: HeuristicConfig) -> tuple[FilterVerdict, str]:
    """Apply the per-paragraph ratio gates; returns (verdict, cleaned text).

    Under DROP_PARAGRAPH, offending paragraphs are removed and the document
    passes unless every paragraph offended (then the first triggered reason is
    reported). Text is rewritten (paragraphs re-joined with single newlines)
    only when something was actually dropped. Under DROP_DOCUMENT any
    offending paragraph rejects the whole document.
    """
    return _evaluate_paragraphs(doc.text, paragraph_stats(doc.text), cfg)


def _finish(doc: Document, cfg: HeuristicConfig,
            verdict: FilterVerdict, cleaned: str) -> tuple[FilterVerdict, Document]:
    if not verdict.passed:
        return verdict, doc
    if cleaned is not doc.text:
        doc = replace(doc, text=cleaned)
        verdict = doc_length_gate(doc, cfg)
        if not verdict.passed:
            return verdict, doc
    return FilterVerdict.ok(), doc


def apply_heuristics(doc: Document, cfg: HeuristicConfig) -> tuple[FilterVerdict, Document]:
    """Run the full gate stack: length, banned content, paragraph ratios,
    then the length gate again on the cleaned text.

    Short-circuits on the first rejection; the returned document carries the
    cleaned text when it passes.
    """
    verdict = doc_length_gate(doc, cfg)
    if not verdict.passed:
        return verdict, doc
    verdict = banned_content_gate(doc, cfg)
    if not verdict.passed:
        return verdict, doc
    return _finish(doc, cfg, *paragraph_quality_gate(doc, cfg))


def apply_heuristics_batch(
    docs: list[Document], cfg: HeuristicConfig,
) -> list[tuple[FilterVerdict, Document]]:
    """apply_heuristics over a batch, sharing one text scan across documents.

    Semantically identical to mapping apply_heuristics; this is the fast path
    for streaming filter runs.
    """
    out: list[tuple[FilterVerdict, Document] | None] = [None] * len(docs)
    needs_paragraphs: list[int] = []
    for i, doc in enumerate(docs):
        verdict = doc_length_gate(doc, cfg)
        if verdict.passed:
            verdict = banned_content_gate(doc, cfg)
        if verdict.passed:
            needs_paragraphs.append(i)
        else:
            out[i] = (verdict, doc)
    stats_per_doc = paragraph_stats_batch([docs[i].text for i in needs_paragraphs])
    for i, paragraphs in zip(needs_paragraphs, stats_per_doc):
        doc = docs[i]
        verdict, cleaned = _evaluate_paragraphs(doc.text, paragraphs, cfg)
        out[i] = _finish(doc, cfg, verdict, cleaned)
    return out  # type: ignore[return-value]
