"""Core record types and shared text primitives.

Everything downstream (filters, dedup, the n-gram models, fertility) builds
on the word / paragraph / character-class definitions fixed here, so they
live in one place and are deliberately boring.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import DataError

# The 24 official EU languages plus the 11 additional supported ones.
EU_LANGUAGES = (
    "bg", "hr", "cs", "da", "nl", "en", "et", "fi", "fr", "de", "el", "hu",
    "ga", "it", "lv", "lt", "mt", "pl", "pt", "ro", "sk", "sl", "es", "sv",
)
EXTRA_LANGUAGES = ("ar", "ca", "zh", "gl", "hi", "ja", "ko", "no", "ru", "tr", "uk")
DEFAULT_LANGUAGES = frozenset(EU_LANGUAGES) | frozenset(EXTRA_LANGUAGES)

#: Sentinel tag for "language unknown / undetermined".
UND = "und"


class Phase(str, enum.Enum):
    """Pre-training phase selector."""

    P1 = "P1"
    P2 = "P2"
    P3 = "P3"


class Reason(str, enum.Enum):
    """Machine-readable rejection codes, one per filter rule."""

    NONE = "NONE"
    TOO_SHORT = "TOO_SHORT"
    BANNED_PHRASE = "BANNED_PHRASE"
    UPPERCASE_RATIO = "UPPERCASE_RATIO"
    SYMBOL_RATIO = "SYMBOL_RATIO"
    NONALPHA_RATIO = "NONALPHA_RATIO"
    PERPLEXITY = "PERPLEXITY"
    DUPLICATE = "DUPLICATE"
    EDU_SCORE = "EDU_SCORE"
    BICLEANER = "BICLEANER"
    COMETKIWI = "COMETKIWI"
    LANG_MISMATCH = "LANG_MISMATCH"


@dataclass(frozen=True)
class FilterVerdict:
    """Pass/reject decision with the measured value that triggered it."""

    passed: bool
    reason: Reason = Reason.NONE
    detail: float | None = None

    def __post_init__(self) -> None:
        if self.passed and (self.reason is not Reason.NONE or self.detail is not None):
            raise ValueError("a passing verdict carries reason NONE and no detail")

    @classmethod
    def ok(cls) -> "FilterVerdict":
        return _VERDICT_OK

    @classmethod
    def reject(cls, reason: Reason, detail: float | None = None) -> "FilterVerdict":
        return cls(False, reason, detail)


_VERDICT_OK = FilterVerdict(True)


@dataclass
class Document:
    """One web-crawl text record with language tag and attached quality scores."""

    id: str
    text: str
    language: str = UND
    scores: dict[str, float] = field(default_factory=dict)
    source: str = ""

    def validate(self, registry: frozenset[str] | set[str] = DEFAULT_LANGUAGES) -> None:
        if not self.id:
            raise DataError("document id must be nonempty")
        if self.language != UND and self.language not in registry:
            raise DataError(f"unknown language tag {self.language!r} for document {self.id!r}")
        for name, value in self.scores.items():
            if not math.isfinite(value):
                raise DataError(f"non-finite score {name}={value!r} on document {self.id!r}")


@dataclass
class SentencePair:
    """One bitext record; exactly one side is English."""

    src_text: str
    tgt_text: str
    src_lang: str
    tgt_lang: str
    scores: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.src_lang == "en") == (self.tgt_lang == "en"):
            raise DataError(
                f"exactly one side must be English, got {self.src_lang!r}/{self.tgt_lang!r}"
            )
        for name, value in self.scores.items():
            if not 0.0 <= value <= 1.0:
                raise DataError(f"score {name}={value!r} outside [0, 1]")

    @property
    def non_english_lang(self) -> str:
        return self.tgt_lang if self.src_lang == "en" else self.src_lang


@dataclass(frozen=True)
class TextStats:
    char_count: int
    word_count: int
    uppercase_fraction: float
    symbol_to_word: float
    nonalpha_word_fraction: float


_WORD_RE = re.compile(r"\w+")
_PARAGRAPH_RE = re.compile(r"\n+")


def word_segment(text: str) -> list[str]:
    """Split text into words: maximal runs of alphanumeric/underscore characters.

    Punctuation never appears in the output; it separates words ("state-of-play"
    yields three words) and pure-punctuation runs are dropped entirely (they are
    counted as symbols by ``text_stats``, not as words).
    """
    return _WORD_RE.findall(text)


def paragraph_split(text: str) -> list[str]:
    """Split on runs of one or more newlines, dropping empty segments."""
    return [p for p in _PARAGRAPH_RE.split(text) if p]


# Lazily grown per-codepoint class tables. _CLASS[cp] bit 0 = alphabetic,
# bit 1 = uppercase letter, bit 2 = word character (alnum or underscore).
_CLASS = np.zeros(0, dtype=np.uint8)


def _class_table(upto: int) -> np.ndarray:
    global _CLASS
    if upto < _CLASS.size:
        return _CLASS
    new_size = min(upto + 4096, 0x110000)
    tbl = np.zeros(new_size, dtype=np.uint8)
    tbl[: _CLASS.size] = _CLASS
    # isupper() is true for some non-letters (Roman numerals); uppercase bit
    # is gated on isalpha() because uppercase_fraction is over letters only.
    # Bit 8 marks word characters with no letter (digits, underscore, ...),
    # so the letterless-word analysis can be screened with one max().
    for cp in range(_CLASS.size, new_size):
        ch = chr(cp)
        bits = 0
        alpha = ch.isalpha()
        if alpha:
            bits |= 1
            if ch.isupper():
                bits |= 2
        if ch.isalnum() or ch == "_":
            bits |= 4
            if not alpha:
                bits |= 8
        tbl[cp] = bits
    _CLASS = tbl
    return _CLASS


def _codepoints(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-32-le"), dtype="<u4")


def text_stats(text: str) -> TextStats:
    """Measured quantities thresholded by the heuristic filters.

    uppercase_fraction is over letters only (0 when no letters); symbol and
    nonalpha ratios are 0 when there are no words. Symbols are "#" plus the
    ellipsis in either its one-char or three-dot form.
    """
    n = len(text)
    if n == 0:
        return TextStats(0, 0, 0.0, 0.0, 0.0)
    cps = _codepoints(text)
    tbl = _class_table(int(cps.max()))
    cls = tbl[cps]
    is_alpha = cls & 1
    letters = int(np.count_nonzero(is_alpha))
    uppers = int(np.count_nonzero(cls & 2))
    upper_frac = uppers / letters if letters else 0.0

    # Word runs from mask transitions; per-run letter presence via cumsum.
    starts, ends = _run_bounds((cls & 4).astype(bool))
    word_count = int(starts.size)
    if word_count == 0:
        return TextStats(n, 0, upper_frac, 0.0, 0.0)
    cum = np.concatenate(([0], np.cumsum(is_alpha, dtype=np.int64)))
    with_letter = int(np.count_nonzero(cum[ends] > cum[starts]))

    symbols = text.count("#") + text.count("…") + text.count("...")
    return TextStats(
        char_count=n,
        word_count=word_count,
        uppercase_fraction=upper_frac,
        symbol_to_word=symbols / word_count,
        nonalpha_word_fraction=(word_count - with_letter) / word_count,
    )


def _run_bounds(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    starts_mask = mask.copy()
    starts_mask[1:] &= ~mask[:-1]
    ends_mask = mask.copy()
    ends_mask[:-1] &= ~mask[1:]
    return np.flatnonzero(starts_mask), np.flatnonzero(ends_mask) + 1


def _cum(mask: np.ndarray) -> np.ndarray:
    out = np.empty(mask.size + 1, dtype=np.int64)
    out[0] = 0
    np.cumsum(mask, dtype=np.int64, out=out[1:])
    return out


def _paragraph_span_stats(text: str) -> list[tuple[int, int, TextStats]]:
    """(start, end, stats) per paragraph, from one vectorized pass.

    Sub-analyses are skipped when the text provably contains none of the
    relevant characters.
    """
    if not text:
        return []
    cps = _codepoints(text)
    tbl = _class_table(int(cps.max()))
    cls = tbl[cps]
    seen_bits = int(np.bitwise_or.reduce(cls))
    par_starts, par_ends = _run_bounds(cps != 0x0A)
    n_par = par_starts.size
    zeros = np.zeros(n_par, dtype=np.int64)

    cum_alpha = _cum(cls & 1)
    letters = cum_alpha[par_ends] - cum_alpha[par_starts]

    if seen_bits & 2:
        cum_upper = _cum((cls & 2) != 0)
        uppers = cum_upper[par_ends] - cum_upper[par_starts]
    else:
        uppers = zeros

    word_starts, word_ends = _run_bounds((cls & 4) != 0)
    w0 = np.searchsorted(word_starts, par_starts)
    w1 = np.searchsorted(word_starts, par_ends)
    word_counts = w1 - w0

    if seen_bits & 8:
        cum_letterful = _cum(cum_alpha[word_ends] > cum_alpha[word_starts])
        letterful = cum_letterful[w1] - cum_letterful[w0]
    else:
        letterful = word_counts

    symbols = zeros
    if "#" in text or "…" in text:
        cum_hash = _cum(cps == 0x23)
        cum_ellipsis = _cum(cps == 0x2026)
        symbols = (cum_hash[par_ends] - cum_hash[par_starts]
                   + cum_ellipsis[par_ends] - cum_ellipsis[par_starts])
    if "..." in text:
        # Non-overlapping "..." occurrences live inside maximal dot runs
        # (k // 3 per run of k dots); runs never cross a paragraph boundary.
        dot_starts, dot_ends = _run_bounds(cps == 0x2E)
        cum_dots = _cum((dot_ends - dot_starts) // 3)
        d0 = np.searchsorted(dot_starts, par_starts)
        d1 = np.searchsorted(dot_starts, par_ends)
        symbols = symbols + cum_dots[d1] - cum_dots[d0]

    fzeros = np.zeros(n_par)
    upper_frac = np.divide(uppers, letters, out=fzeros.copy(), where=letters > 0)
    symbol_ratio = np.divide(symbols, word_counts, out=fzeros.copy(), where=word_counts > 0)
    nonalpha_frac = np.divide(word_counts - letterful, word_counts,
                              out=fzeros, where=word_counts > 0)

    return [
        (s, e, TextStats(e - s, wc, uf, sr, nf))
        for s, e, wc, uf, sr, nf in zip(
            par_starts.tolist(), par_ends.tolist(), word_counts.tolist(),
            upper_frac.tolist(), symbol_ratio.tolist(), nonalpha_frac.tolist())
    ]


def paragraph_stats(text: str) -> list[tuple[str, TextStats]]:
    """Stats for every paragraph of a document in one vectorized pass.

    Equivalent to ``[(p, text_stats(p)) for p in paragraph_split(text)]``.
    """
    return [(text[s:e], stats) for s, e, stats in _paragraph_span_stats(text)]


def paragraph_stats_batch(texts: Sequence[str]) -> list[list[tuple[str, TextStats]]]:
    """paragraph_stats for many documents in one shared pass.

    Joining the documents with newline separators is safe because paragraphs
    never span a newline; per-call numpy overhead is then amortized across
    the whole batch, which is the fast path the filter pipeline uses.
    """
    if not texts:
        return []
    joined = "\n".join(texts)
    spans = _paragraph_span_stats(joined)
    out: list[list[tuple[str, TextStats]]] = []
    k = 0
    offset = 0
    for text in texts:
        end = offset + len(text)
        bucket: list[tuple[str, TextStats]] = []
        while k < len(spans) and spans[k][0] < end:
            s, e, stats = spans[k]
            bucket.append((joined[s:e], stats))
            k += 1
        out.append(bucket)
        offset = end + 1
    return out


# ---------------------------------------------------------------------------
# Record file formats


def read_documents(fp: TextIO, registry: frozenset[str] | set[str] = DEFAULT_LANGUAGES,
                   validate: bool = True) -> Iterator[Document]:
    """Read documents from JSONL (keys: id, text, lang, scores, source)."""
    for lineno, line in enumerate(fp, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
            raise DataError(f"line {lineno}: document object needs 'id' and 'text'")
        doc = Document(
            id=str(obj["id"]),
            text=str(obj["text"]),
            language=str(obj.get("lang", UND)),
            scores={k: float(v) for k, v in (obj.get("scores") or {}).items()},
            source=str(obj.get("source", "")),
        )
        if validate:
            doc.validate(registry)
        yield doc


def write_documents(fp: TextIO, docs: Iterable[Document]) -> int:
    n = 0
    for doc in docs:
        obj = {"id": doc.id, "text": doc.text, "lang": doc.language,
               "scores": doc.scores, "source": doc.source}
        fp.write(json.dumps(obj, ensure_ascii=False) + "\n")
        n += 1
    return n


_PAIR_SCORE_COLS = ("bicleaner", "cometkiwi")


def read_sentence_pairs(fp: TextIO) -> Iterator[SentencePair]:
    """Read bitext TSV: src, tgt, src_lang, tgt_lang, bicleaner, cometkiwi.

    Score columns may be empty; no header row.
    """
    for lineno, line in enumerate(fp, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) < 4:
            raise DataError(f"line {lineno}: expected >= 4 tab-separated columns")
        cols += [""] * (6 - len(cols))
        scores = {}
        for name, raw in zip(_PAIR_SCORE_COLS, cols[4:6]):
            if raw:
                try:
                    scores[name] = float(raw)
                except ValueError as exc:
                    raise DataError(f"line {lineno}: bad {name} value {raw!r}") from exc
        yield SentencePair(cols[0], cols[1], cols[2], cols[3], scores)


def write_sentence_pairs(fp: TextIO, pairs: Iterable[SentencePair]) -> int:
    n = 0
    for pair in pairs:
        cols = [
            _flatten_field(pair.src_text),
            _flatten_field(pair.tgt_text),
            pair.src_lang,
            pair.tgt_lang,
            _fmt_score(pair.scores.get("bicleaner")),
            _fmt_score(pair.scores.get("cometkiwi")),
        ]
        fp.write("\t".join(cols) + "\n")
        n += 1
    return n


def _flatten_field(text: str) -> str:
    # Sentence-level bitext should not contain tabs/newlines; normalize if it does.
    return re.sub(r"[\t\n\r]+", " ", text)


def _fmt_score(value: float | None) -> str:
    return "" if value is None else repr(value)
