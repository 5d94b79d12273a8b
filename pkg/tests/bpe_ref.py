"""Test-side BPE reference code.

``oracle_encode`` re-derives the encoder contract as literally as possible:
scan the merge list from rank 0 after every single application, merge the
leftmost occurrence, restart. It shares no code with the production encoder.

``train_bpe`` is a small reference trainer used only to build test vocabs
(most-frequent-pair merging with deterministic lexicographic tie-breaks).
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Iterable, Sequence

MARKER = "▁"
BYTE_TOKENS = [f"<0x{i:02X}>" for i in range(256)]


# ---------------------------------------------------------------------------
# Naive oracle


def _oracle_chunks(text: str) -> list[tuple[str, str]]:
    if not text:
        return []
    chunks: list[tuple[str, str]] = []
    pending = 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == " ":
            pending += 1
            i += 1
        elif ch == MARKER:
            chunks += [("bpe", MARKER)] * pending
            pending = 0
            chunks.append(("raw", MARKER))
            i += 1
        elif ch.isspace():
            chunks += [("bpe", MARKER)] * pending
            pending = 0
            chunks.append(("bpe", ch))
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] != MARKER:
                j += 1
            if pending:
                chunks += [("bpe", MARKER)] * (pending - 1)
                chunks.append(("bpe", MARKER + text[i:j]))
            else:
                chunks.append(("bpe", text[i:j]))
            pending = 0
            i = j
    chunks += [("bpe", MARKER)] * pending
    return chunks


def _oracle_merge(symbols: list[str], merges: Sequence[tuple[str, str]]) -> list[str]:
    while True:
        applied = False
        for left, right in merges:
            for pos in range(len(symbols) - 1):
                if symbols[pos] == left and symbols[pos + 1] == right:
                    symbols = symbols[:pos] + [left + right] + symbols[pos + 2:]
                    applied = True
                    break
            if applied:
                break
        if not applied:
            return symbols


def oracle_encode(pieces: Sequence[str], merges: Sequence[tuple[str, str]], text: str) -> list[int]:
    ids = {piece: i for i, piece in enumerate(pieces)}
    out: list[int] = []
    for kind, payload in _oracle_chunks(text):
        if kind == "raw":
            out.extend(ids[BYTE_TOKENS[b]] for b in payload.encode("utf-8"))
            continue
        for symbol in _oracle_merge(list(payload), merges):
            if symbol in ids:
                out.append(ids[symbol])
            else:
                out.extend(ids[BYTE_TOKENS[b]] for b in symbol.encode("utf-8"))
    return out


# ---------------------------------------------------------------------------
# Reference trainer (fixture building only)


def train_bpe(texts: Iterable[str], num_merges: int) -> tuple[list[str], list[tuple[str, str]]]:
    """Learn merges by most-frequent-pair counting over marked words.

    Returns (core_pieces, merges) suitable for BpeVocab.build. Ties break on
    the lexicographically smallest pair so training is deterministic.
    """
    word_freq: Counter[str] = Counter()
    for text in texts:
        for word in text.split():
            word_freq[MARKER + word] += 1
    words = [list(w) for w in word_freq]
    freqs = list(word_freq.values())

    pair_counts: Counter[tuple[str, str]] = Counter()
    pair_words: dict[tuple[str, str], set[int]] = defaultdict(set)
    for wi, syms in enumerate(words):
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += freqs[wi]
            pair_words[pair].add(wi)

    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        best_pair = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(best_pair)
        merged = best_pair[0] + best_pair[1]
        for wi in list(pair_words[best_pair]):
            syms = words[wi]
            freq = freqs[wi]
            for pair in zip(syms, syms[1:]):
                pair_counts[pair] -= freq
                if pair_counts[pair] <= 0:
                    del pair_counts[pair]
            new_syms = []
            k = 0
            while k < len(syms):
                if k + 1 < len(syms) and (syms[k], syms[k + 1]) == best_pair:
                    new_syms.append(merged)
                    k += 2
                else:
                    new_syms.append(syms[k])
                    k += 1
            words[wi] = new_syms
            for pair in zip(new_syms, new_syms[1:]):
                pair_counts[pair] += freq
                pair_words[pair].add(wi)
        del pair_words[best_pair]

    chars = sorted({c for w in word_freq for c in w})
    pieces = chars + [left + right for left, right in merges]
    seen = set()
    core = [p for p in pieces if not (p in seen or seen.add(p))]
    return core, merges
