"""Exact and near-duplicate removal over document streams.

Exact dedup hashes a normalized form of the text (case-folded, digits
stripped, whitespace collapsed) with a 128-bit non-cryptographic hash.
Near-duplicate detection uses MinHash signatures over 5-word shingles with
LSH banding (32 bands x 4 rows at 128 permutations); first occurrence wins
in both cases and survivors keep their input order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np
import xxhash

from .errors import ConfigError
from .records import Document, word_segment

DEFAULT_NUM_PERMUTATIONS = 128
DEFAULT_SHINGLE_SIZE = 5
LSH_BANDS = 32
LSH_ROWS = 4

_DIGIT_RE = re.compile(r"\d+")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class DedupKey:
    """128-bit digest of the normalized text."""

    digest: int

    def to_bytes(self) -> bytes:
        return self.digest.to_bytes(16, "little")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "DedupKey":
        return cls(int.from_bytes(raw, "little"))


@dataclass(frozen=True)
class MinHashSignature:
    """Fixed-length vector of 64-bit minima under hash permutations."""

    values: tuple[int, ...]
    shingle_size: int = DEFAULT_SHINGLE_SIZE


def normalize_for_dedup(text: str) -> str:
    """Case-fold, drop digits, collapse whitespace runs, strip the ends."""
    text = _DIGIT_RE.sub("", text.casefold())
    return _WS_RE.sub(" ", text).strip()


def text_key(text: str) -> DedupKey:
    return DedupKey(int.from_bytes(
        xxhash.xxh3_128_digest(normalize_for_dedup(text).encode("utf-8")), "little"))


def document_key(doc: Document) -> DedupKey:
    return text_key(doc.text)


class DedupKeyStore:
    """Set of seen DedupKeys, optionally persisted for resumable runs.

    On-disk format: raw little-endian 16-byte digests, sorted ascending.
    """

    def __init__(self) -> None:
        self._seen: set[int] = set()

    def __len__(self) -> int:
        return len(self._seen)

    def __contains__(self, key: DedupKey) -> bool:
        return key.digest in self._seen

    def add(self, key: DedupKey) -> None:
        self._seen.add(key.digest)

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fp:
            for digest in sorted(self._seen):
                fp.write(digest.to_bytes(16, "little"))

    @classmethod
    def load(cls, path: str | Path) -> "DedupKeyStore":
        store = cls()
        raw = Path(path).read_bytes()
        if len(raw) % 16:
            raise ConfigError(f"{path}: key store size not a multiple of 16 bytes")
        for i in range(0, len(raw), 16):
            store._seen.add(int.from_bytes(raw[i:i + 16], "little"))
        return store


def exact_dedup(
    docs: Iterable[Document],
    key_fn: Callable[[Document], DedupKey] = document_key,
    store: DedupKeyStore | None = None,
) -> Iterator[Document]:
    """Keep the first occurrence per DedupKey, preserving stream order."""
    if store is None:
        store = DedupKeyStore()
    for doc in docs:
        key = key_fn(doc)
        if key in store:
            continue
        store.add(key)
        yield doc


# ---------------------------------------------------------------------------
# MinHash / LSH near-duplicate layer


def _permutation_params(seed: int, num_permutations: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    # Odd multipliers make x -> a*x + b (mod 2^64) a bijection of the hash space.
    a = rng.integers(0, 2**63, size=num_permutations, dtype=np.uint64) * 2 + 1
    b = rng.integers(0, 2**64, size=num_permutations, dtype=np.uint64)
    return a, b


def shingles(text: str, shingle_size: int = DEFAULT_SHINGLE_SIZE) -> set[str]:
    """Word shingles; texts shorter than one shingle become a single shingle."""
    words = word_segment(text)
    if len(words) <= shingle_size:
        return {" ".join(words)}
    return {" ".join(words[i:i + shingle_size]) for i in range(len(words) - shingle_size + 1)}


def _shingle_hashes(text: str, shingle_size: int) -> np.ndarray:
    return np.fromiter(
        (xxhash.xxh3_64_intdigest(s.encode("utf-8")) for s in shingles(text, shingle_size)),
        dtype=np.uint64,
    )


def minhash_signature(
    text: str,
    seed: int = 0,
    num_permutations: int = DEFAULT_NUM_PERMUTATIONS,
    shingle_size: int = DEFAULT_SHINGLE_SIZE,
) -> MinHashSignature:
    a, b = _permutation_params(seed, num_permutations)
    base = _shingle_hashes(text, shingle_size)
    with np.errstate(over="ignore"):
        permuted = base[:, None] * a[None, :] + b[None, :]
    values = permuted.min(axis=0)
    return MinHashSignature(tuple(int(v) for v in values), shingle_size)


def estimated_jaccard(sig_a: MinHashSignature, sig_b: MinHashSignature) -> float:
    if len(sig_a.values) != len(sig_b.values):
        raise ConfigError("signatures have different lengths")
    matches = sum(x == y for x, y in zip(sig_a.values, sig_b.values))
    return matches / len(sig_a.values)


class LshIndex:
    def __init__(self, bands: int, rows: int) -> None:
        self.bands = bands
        self.rows = rows
        self._buckets: dict[tuple[int, tuple[int, ...]], list[int]] = {}

    def candidates(self, sig: MinHashSignature) -> set[int]:
        found: set[int] = set()
        for band in range(self.bands):
            key = (band, sig.values[band * self.rows:(band + 1) * self.rows])
            found.update(self._buckets.get(key, ()))
        return found

    def insert(self, sig: MinHashSignature, idx: int) -> None:
        for band in range(self.bands):
            key = (band, sig.values[band * self.rows:(band + 1) * self.rows])
            self._buckets.setdefault(key, []).append(idx)


def near_dup_cluster(
    docs: Iterable[Document],
    threshold: float = 0.8,
    seed: int = 0,
    num_permutations: int = DEFAULT_NUM_PERMUTATIONS,
    shingle_size: int = DEFAULT_SHINGLE_SIZE,
    bands: int = LSH_BANDS,
    rows: int = LSH_ROWS,
) -> Iterator[Document]:
    """Drop documents whose estimated Jaccard with an earlier survivor meets
    the threshold; survivors preserve input order."""
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"near-dup threshold must be in (0, 1], got {threshold}")
    if bands * rows != num_permutations:
        raise ConfigError("bands * rows must equal the permutation count")
    index = LshIndex(bands, rows)
    survivors: list[MinHashSignature] = []
    for doc in docs:
        sig = minhash_signature(doc.text, seed, num_permutations, shingle_size)
        duplicate = False
        for idx in index.candidates(sig):
            if estimated_jaccard(sig, survivors[idx]) >= threshold:
                duplicate = True
                break
        if duplicate:
            continue
        index.insert(sig, len(survivors))
        survivors.append(sig)
        yield doc
