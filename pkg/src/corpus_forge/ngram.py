"""Word n-gram language model (stupid backoff) and character n-gram
language identification, backing the perplexity and language-ID gates.

The LM is count-based and deliberately simple: scores are unnormalized
stupid-backoff ratios, which rank text naturalness well enough for
filtering and can be checked by hand on tiny corpora.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    EmptyCorpusError,
    EmptyTextError,
    InsufficientDataError,
    NoBandsError,
)
from .records import Document, FilterVerdict, Reason, UND, word_segment

BOS = "<s>"
EOS = "</s>"

# Tuple keys are serialized with the unit separator, which cannot occur in
# word_segment output.
_SEP = "\x1f"

MODEL_FORMAT_VERSION = 1


def _sentences(text: str) -> list[list[str]]:
    out = []
    for line in text.split("\n"):
        tokens = word_segment(line)
        if tokens:
            out.append(tokens)
    return out


@dataclass
class NgramModel:
    """Count tables for orders 1..order plus stupid-backoff scoring."""

    order: int
    counts: list[dict[tuple[str, ...], int]]
    context_totals: list[dict[tuple[str, ...], int]]
    vocab_size: int
    backoff_alpha: float = 0.4

    def _unigram_total(self) -> int:
        return self.context_totals[0][()]

    def score(self, token: str, context: tuple[str, ...]) -> float:
        """Stupid-backoff score of one token given up to order-1 context words."""
        context = context[-(self.order - 1):] if self.order > 1 else ()
        penalty = 1.0
        for k in range(len(context), 0, -1):
            ctx = context[len(context) - k:]
            gram_count = self.counts[k].get(ctx + (token,), 0)
            if gram_count:
                return penalty * gram_count / self.context_totals[k][ctx]
            penalty *= self.backoff_alpha
        unigram = self.counts[0].get((token,), 0)
        if unigram:
            return penalty * unigram / self._unigram_total()
        # Unseen word: one more backoff step to uniform over vocab+1.
        return penalty * self.backoff_alpha / (self.vocab_size + 1)

    def log_prob(self, tokens: list[str]) -> float:
        """Sum of log scores over one padded sentence (EOS included)."""
        padded = [BOS] * (self.order - 1) + tokens + [EOS]
        total = 0.0
        for i in range(self.order - 1, len(padded)):
            total += math.log(self.score(padded[i], tuple(padded[max(0, i - self.order + 1):i])))
        return total

    def save(self, path: str | Path) -> None:
        obj = {
            "format_version": MODEL_FORMAT_VERSION,
            "order": self.order,
            "vocab_size": self.vocab_size,
            "backoff_alpha": self.backoff_alpha,
            "counts": [
                {_SEP.join(gram): c for gram, c in table.items()}
                for table in self.counts
            ],
        }
        Path(path).write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if obj.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(f"{path}: unsupported model format")
        counts: list[dict[tuple[str, ...], int]] = []
        for table in obj["counts"]:
            counts.append({tuple(key.split(_SEP)): c for key, c in table.items()})
        context_totals = _context_totals_from_counts(counts)
        return cls(
            order=obj["order"],
            counts=counts,
            context_totals=context_totals,
            vocab_size=obj["vocab_size"],
            backoff_alpha=obj["backoff_alpha"],
        )


def _context_totals_from_counts(
    counts: list[dict[tuple[str, ...], int]],
) -> list[dict[tuple[str, ...], int]]:
    totals: list[dict[tuple[str, ...], int]] = []
    for table in counts:
        ctx_table: dict[tuple[str, ...], int] = {}
        for gram, c in table.items():
            ctx = gram[:-1]
            ctx_table[ctx] = ctx_table.get(ctx, 0) + c
        totals.append(ctx_table)
    return totals


def train_lm(corpus: Iterable[Document], order: int = 5, backoff_alpha: float = 0.4) -> NgramModel:
    """Count n-grams of orders 1..order over newline-delimited sentences.

    Sentences are padded with order-1 BOS markers and one EOS marker; BOS
    never enters the unigram table, so the unigram total equals token count
    plus sentence count.
    """
    if not 1 <= order <= 5:
        raise ConfigError(f"order must be in [1, 5], got {order}")
    counts: list[dict[tuple[str, ...], int]] = [dict() for _ in range(order)]
    n_sentences = 0
    vocab: set[str] = set()
    for doc in corpus:
        for tokens in _sentences(doc.text):
            n_sentences += 1
            vocab.update(tokens)
            padded = [BOS] * (order - 1) + tokens + [EOS]
            for k in range(1, order + 1):
                table = counts[k - 1]
                # Grams ending on a BOS pad carry no information; skip them.
                for i in range(order - 1, len(padded)):
                    gram = tuple(padded[i - k + 1:i + 1])
                    table[gram] = table.get(gram, 0) + 1
    if n_sentences == 0:
        raise EmptyCorpusError("no sentences with tokens in the training corpus")
    return NgramModel(
        order=order,
        counts=counts,
        context_totals=_context_totals_from_counts(counts),
        vocab_size=len(vocab),
        backoff_alpha=backoff_alpha,
    )


def perplexity(model: NgramModel, text: str) -> float:
    """exp(-mean log score) over all tokens including one EOS per sentence."""
    sents = _sentences(text)
    n_tokens = sum(len(s) for s in sents)
    if n_tokens == 0:
        raise EmptyTextError("text has no tokens")
    total = sum(model.log_prob(s) for s in sents)
    return math.exp(-total / (n_tokens + len(sents)))


@dataclass
class PerplexityBands:
    """Per-language keep-below cutoffs calibrated from a sample."""

    keep_below: dict[str, float] = field(default_factory=dict)
    percentile: float = 67.0

    def __contains__(self, language: str) -> bool:
        return language in self.keep_below


def calibrate_bands(
    model: NgramModel,
    sample: Iterable[Document],
    percentile: float = 67.0,
) -> PerplexityBands:
    """Set each language's cutoff at the given percentile of sample perplexities."""
    if not 0 < percentile <= 100:
        raise ConfigError(f"percentile must be in (0, 100], got {percentile}")
    by_lang: dict[str, list[float]] = {}
    for doc in sample:
        by_lang.setdefault(doc.language, []).append(perplexity(model, doc.text))
    if not by_lang:
        raise EmptyCorpusError("no calibration documents")
    cutoffs = {
        lang: float(np.percentile(np.asarray(ppls), percentile))
        for lang, ppls in by_lang.items()
    }
    return PerplexityBands(keep_below=cutoffs, percentile=percentile)


def perplexity_gate(doc: Document, model: NgramModel, bands: PerplexityBands) -> FilterVerdict:
    """Reject documents whose perplexity exceeds the language's cutoff (strict)."""
    if doc.language not in bands:
        raise NoBandsError(f"no perplexity band calibrated for language {doc.language!r}")
    ppl = perplexity(model, doc.text)
    if ppl > bands.keep_below[doc.language]:
        return FilterVerdict.reject(Reason.PERPLEXITY, ppl)
    return FilterVerdict.ok()


# ---------------------------------------------------------------------------
# Character n-gram language identification

_LID_ORDERS = (1, 2, 3)
_MIN_CHARS_PER_LANGUAGE = 1000
_MIN_TEXT_CHARS = 20


@dataclass
class LangProfile:
    """Add-one-smoothed character 1-3 gram log frequencies for one language."""

    language: str
    log_freq: dict[int, dict[str, float]]
    log_floor: dict[int, float]

    def score(self, text: str) -> float:
        """Mean per-character log-likelihood across the three orders."""
        folded = text.casefold()
        total = 0.0
        for order in _LID_ORDERS:
            table = self.log_freq[order]
            floor = self.log_floor[order]
            for i in range(len(folded) - order + 1):
                total += table.get(folded[i:i + order], floor)
        return total / len(folded)


def train_langid(corpora: Mapping[str, str]) -> dict[str, LangProfile]:
    """Build one profile per language from raw text (>= 1000 chars each)."""
    if len(corpora) < 2:
        raise InsufficientDataError("language ID needs at least 2 languages")
    profiles: dict[str, LangProfile] = {}
    for language, text in corpora.items():
        if len(text) < _MIN_CHARS_PER_LANGUAGE:
            raise InsufficientDataError(
                f"language {language!r}: need >= {_MIN_CHARS_PER_LANGUAGE} chars, got {len(text)}"
            )
        folded = text.casefold()
        log_freq: dict[int, dict[str, float]] = {}
        log_floor: dict[int, float] = {}
        for order in _LID_ORDERS:
            grams: dict[str, int] = {}
            for i in range(len(folded) - order + 1):
                g = folded[i:i + order]
                grams[g] = grams.get(g, 0) + 1
            total = sum(grams.values())
            denom = total + len(grams)
            log_freq[order] = {g: math.log((c + 1) / denom) for g, c in grams.items()}
            log_floor[order] = math.log(1.0 / denom)
        profiles[language] = LangProfile(language, log_freq, log_floor)
    return profiles


def identify_language(profiles: Mapping[str, LangProfile], text: str) -> tuple[str, float]:
    """Best-scoring language and its margin over the runner-up.

    Texts under 20 characters return ("und", 0.0); ties break on the tag.
    """
    if len(text) < _MIN_TEXT_CHARS:
        return UND, 0.0
    scored = sorted(
        ((profile.score(text), tag) for tag, profile in profiles.items()),
        key=lambda pair: (-pair[0], pair[1]),
    )
    if not scored:
        raise ConfigError("no language profiles supplied")
    if len(scored) == 1:
        return scored[0][1], math.inf
    return scored[0][1], scored[0][0] - scored[1][0]


def save_profiles(profiles: Mapping[str, LangProfile], path: str | Path) -> None:
    obj = {
        tag: {
            "log_freq": {str(k): v for k, v in p.log_freq.items()},
            "log_floor": {str(k): v for k, v in p.log_floor.items()},
        }
        for tag, p in profiles.items()
    }
    Path(path).write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")


def load_profiles(path: str | Path) -> dict[str, LangProfile]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return {
        tag: LangProfile(
            language=tag,
            log_freq={int(k): v for k, v in spec["log_freq"].items()},
            log_floor={int(k): v for k, v in spec["log_floor"].items()},
        )
        for tag, spec in obj.items()
    }
