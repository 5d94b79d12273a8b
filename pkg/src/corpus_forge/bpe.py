"""BPE encoder with byte fallback, plus the fertility metric and reports.

Encoding is SentencePiece-flavoured: a dummy boundary marker is prepended,
ASCII spaces become boundary markers attached to the following word, and
merges apply within word chunks only. Any symbol left over that is not a
vocabulary piece decomposes into reserved single-byte tokens, so every valid
Unicode string is encodable and decoding is byte-exact.

Merge order semantics: at every step the earliest-ranked applicable merge is
applied at its leftmost occurrence, then the scan restarts. For vocabularies
produced by an actual BPE trainer this coincides with the usual
all-occurrences convention.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import EmptyCorpusError
from .records import Document, word_segment

#: Word-boundary marker (SentencePiece's LOWER ONE EIGHTH BLOCK).
MARKER = "▁"

BYTE_TOKENS = tuple(f"<0x{i:02X}>" for i in range(256))


@dataclass(frozen=True)
class BpeVocab:
    """Ordered piece list (index = token id) plus ranked merge table."""

    pieces: tuple[str, ...]
    merges: tuple[tuple[str, str], ...]
    piece_ids: dict[str, int] = field(init=False, repr=False, compare=False)
    merge_ranks: dict[tuple[str, str], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids: dict[str, int] = {}
        for i, piece in enumerate(self.pieces):
            if piece in ids:
                raise ValueError(f"duplicate piece {piece!r}")
            ids[piece] = i
        for token in BYTE_TOKENS:
            if token not in ids:
                raise ValueError(f"byte token {token!r} missing from pieces")
        if MARKER not in ids:
            raise ValueError(f"boundary marker {MARKER!r} missing from pieces")
        ranks: dict[tuple[str, str], int] = {}
        for rank, merge in enumerate(self.merges):
            left, right = merge
            if left + right not in ids:
                raise ValueError(f"merge {merge!r} produces unknown piece {left + right!r}")
            ranks.setdefault((left, right), rank)
        object.__setattr__(self, "piece_ids", ids)
        object.__setattr__(self, "merge_ranks", ranks)

    @classmethod
    def build(
        cls,
        core_pieces: Sequence[str],
        merges: Sequence[tuple[str, str]] = (),
    ) -> "BpeVocab":
        """Assemble a vocab from user pieces, adding the implicit marker piece
        and the 256-byte-token block."""
        pieces = list(core_pieces)
        if MARKER not in pieces:
            pieces.insert(0, MARKER)
        pieces.extend(BYTE_TOKENS)
        return cls(tuple(pieces), tuple(tuple(m) for m in merges))

    def __len__(self) -> int:
        return len(self.pieces)

    # -- file format: pieces one per line; merges "left right" per line;
    #    marker and byte-token block are implicit.

    def save(self, pieces_path: str | Path, merges_path: str | Path) -> None:
        byte_set = set(BYTE_TOKENS)
        with open(pieces_path, "w", encoding="utf-8", newline="\n") as fp:
            for piece in self.pieces:
                if piece not in byte_set:
                    fp.write(piece + "\n")
        with open(merges_path, "w", encoding="utf-8", newline="\n") as fp:
            for left, right in self.merges:
                fp.write(f"{left} {right}\n")

    @classmethod
    def load(cls, pieces_path: str | Path, merges_path: str | Path) -> "BpeVocab":
        pieces = [line.rstrip("\n") for line in
                  Path(pieces_path).read_text(encoding="utf-8").splitlines()]
        merges = []
        for lineno, line in enumerate(Path(merges_path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"{merges_path}:{lineno}: expected 'left right'")
            merges.append((parts[0], parts[1]))
        return cls.build([p for p in pieces if p], merges)


def _chunk_text(text: str) -> list[tuple[str, str]]:
    """Split text into ("bpe", symbols) and ("raw", char) chunks.

    ASCII spaces turn into boundary markers: one attaches to the following
    word, extras stand alone. A dummy marker is prepended so decoding can
    strip exactly one leading space. Literal U+2581 in the input is emitted
    as a raw chunk (forced to byte tokens) so it stays distinguishable from
    marker-encoded spaces; other whitespace passes through as its own chunk.
    """
    if not text:
        return []
    chunks: list[tuple[str, str]] = []
    pending = 1  # dummy prefix marker
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == " ":
            pending += 1
            i += 1
        elif ch == MARKER:
            chunks.extend(("bpe", MARKER) for _ in range(pending))
            pending = 0
            chunks.append(("raw", MARKER))
            i += 1
        elif ch.isspace():
            chunks.extend(("bpe", MARKER) for _ in range(pending))
            pending = 0
            chunks.append(("bpe", ch))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] != MARKER:
                j += 1
            chunks.extend(("bpe", MARKER) for _ in range(pending - 1))
            chunks.append(("bpe", (MARKER if pending else "") + text[i:j]))
            pending = 0
            i = j
    chunks.extend(("bpe", MARKER) for _ in range(pending))
    return chunks


def _merge_symbols(symbols: list[str], vocab: BpeVocab) -> list[str]:
    ranks = vocab.merge_ranks
    while len(symbols) > 1:
        best_rank = None
        best_pos = -1
        for pos in range(len(symbols) - 1):
            rank = ranks.get((symbols[pos], symbols[pos + 1]))
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_pos = pos
        if best_rank is None:
            break
        symbols[best_pos:best_pos + 2] = [symbols[best_pos] + symbols[best_pos + 1]]
    return symbols


def bpe_encode(vocab: BpeVocab, text: str) -> list[int]:
    """Encode text to token ids; unknown symbols fall back to byte tokens."""
    ids = vocab.piece_ids
    out: list[int] = []
    for kind, payload in _chunk_text(text):
        if kind == "raw":
            out.extend(ids[BYTE_TOKENS[b]] for b in payload.encode("utf-8"))
            continue
        for symbol in _merge_symbols(list(payload), vocab):
            token_id = ids.get(symbol)
            if token_id is not None:
                out.append(token_id)
            else:
                out.extend(ids[BYTE_TOKENS[b]] for b in symbol.encode("utf-8"))
    return out


_BYTE_VALUES = {token: i for i, token in enumerate(BYTE_TOKENS)}


def bpe_decode(vocab: BpeVocab, token_ids: Iterable[int]) -> str:
    """Invert bpe_encode: byte runs decode verbatim, markers become spaces,
    and the dummy leading space is stripped."""
    parts: list[str] = []
    buffer = bytearray()
    for token_id in token_ids:
        piece = vocab.pieces[token_id]
        byte_value = _BYTE_VALUES.get(piece)
        if byte_value is not None:
            buffer.append(byte_value)
            continue
        if buffer:
            parts.append(buffer.decode("utf-8"))
            buffer.clear()
        parts.append(piece.replace(MARKER, " "))
    if buffer:
        parts.append(buffer.decode("utf-8"))
    text = "".join(parts)
    return text[1:] if text.startswith(" ") else text


# ---------------------------------------------------------------------------
# Fertility


def _content_token_count(vocab: BpeVocab, text: str) -> int:
    """Emitted tokens minus bare boundary markers (whitespace bookkeeping)."""
    marker_id = vocab.piece_ids[MARKER]
    return sum(1 for t in bpe_encode(vocab, text) if t != marker_id)


def fertility(vocab: BpeVocab, corpus: Iterable[Document]) -> float:
    """Tokens per word, micro-averaged over the corpus."""
    tokens = 0
    words = 0
    for doc in corpus:
        tokens += _content_token_count(vocab, doc.text)
        words += len(word_segment(doc.text))
    if words == 0:
        raise EmptyCorpusError("fertility needs at least one word")
    return tokens / words


@dataclass(frozen=True)
class FertilityRow:
    tokenizer: str
    language: str
    fertility: float
    token_count: int
    word_count: int


@dataclass
class FertilityReport:
    rows: list[FertilityRow]
    corpus_fingerprint: str

    def ranking(self, language: str) -> list[str]:
        """Tokenizer names from best (lowest fertility) to worst."""
        rows = [r for r in self.rows if r.language == language]
        return [r.tokenizer for r in sorted(rows, key=lambda r: (r.fertility, r.tokenizer))]

    def to_tsv(self) -> str:
        lines = ["tokenizer\tlanguage\tfertility\ttokens\twords"]
        lines += [
            f"{r.tokenizer}\t{r.language}\t{r.fertility:.6f}\t{r.token_count}\t{r.word_count}"
            for r in self.rows
        ]
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        header = ("tokenizer", "language", "fertility", "tokens", "words")
        cells = [header] + [
            (r.tokenizer, r.language, f"{r.fertility:.4f}", str(r.token_count), str(r.word_count))
            for r in self.rows
        ]
        widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in cells]
        lines.append(f"corpus fingerprint: {self.corpus_fingerprint}")
        return "\n".join(lines) + "\n"


def _corpus_fingerprint(corpora: Mapping[str, Sequence[Document]]) -> str:
    digest = hashlib.sha256()
    for language in sorted(corpora):
        digest.update(language.encode("utf-8") + b"\x00")
        for doc in corpora[language]:
            digest.update(doc.text.encode("utf-8") + b"\x00")
    return digest.hexdigest()[:16]


def fertility_report(
    vocabs: Mapping[str, BpeVocab],
    corpora: Mapping[str, Sequence[Document]],
) -> FertilityReport:
    """One row per (tokenizer, language), sorted by language then name."""
    rows = []
    for language in sorted(corpora):
        docs = list(corpora[language])
        words = sum(len(word_segment(d.text)) for d in docs)
        if words == 0:
            raise EmptyCorpusError(f"corpus for {language!r} has no words")
        for name in sorted(vocabs):
            tokens = sum(_content_token_count(vocabs[name], d.text) for d in docs)
            rows.append(FertilityRow(name, language, tokens / words, tokens, words))
    return FertilityReport(rows=rows, corpus_fingerprint=_corpus_fingerprint(corpora))


def iter_token_pieces(vocab: BpeVocab, token_ids: Iterable[int]) -> Iterator[str]:
    for token_id in token_ids:
        yield vocab.pieces[token_id]
