"""Score-threshold gates for externally supplied quality annotations.

Educational scores gate web documents (strictly above 2 in phase 1, above 3
in phases 2-3); Bicleaner and CometKiwi scores gate sentence pairs (keep at
or above 0.5/0.6 and 0.7). The scorers themselves are out of scope: scores
arrive on the records.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import xxhash

from .dedup import DedupKey, normalize_for_dedup
from .errors import ConfigError, MissingScoreError
from .records import Document, FilterVerdict, Phase, Reason, SentencePair


@dataclass
class QualityThresholds:
    edu_min_phase1: float = 2.0
    edu_min_phase23: float = 3.0
    bicleaner_default: float = 0.5
    bicleaner_overrides: dict[str, float] = field(default_factory=lambda: {"pt": 0.6})
    cometkiwi_min: float = 0.7

    def __post_init__(self) -> None:
        for name in ("edu_min_phase1", "edu_min_phase23"):
            v = getattr(self, name)
            if not 0.0 <= v <= 5.0:
                raise ConfigError(f"{name} must be in [0, 5], got {v}")
        for name, v in [("bicleaner_default", self.bicleaner_default),
                        ("cometkiwi_min", self.cometkiwi_min),
                        *self.bicleaner_overrides.items()]:
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"threshold {name}={v} outside [0, 1]")

    def edu_min(self, phase: Phase) -> float:
        return self.edu_min_phase1 if phase is Phase.P1 else self.edu_min_phase23

    def bicleaner_min(self, language: str) -> float:
        return self.bicleaner_overrides.get(language, self.bicleaner_default)


def edu_score_gate(doc: Document, thresholds: QualityThresholds, phase: Phase) -> FilterVerdict:
    """Keep documents whose educational score is strictly above the phase cutoff."""
    if "edu" not in doc.scores:
        raise MissingScoreError(f"document {doc.id!r} has no 'edu' score")
    score = doc.scores["edu"]
    if score <= thresholds.edu_min(phase):
        return FilterVerdict.reject(Reason.EDU_SCORE, score)
    return FilterVerdict.ok()


def bitext_gate(
    pair: SentencePair,
    thresholds: QualityThresholds,
    strict: bool = False,
) -> FilterVerdict:
    """Reject pairs scoring below the Bicleaner or CometKiwi cutoffs.

    The Bicleaner cutoff is selected by the non-English side. Missing scores
    skip their rule unless strict mode is on.
    """
    bicleaner = pair.scores.get("bicleaner")
    if bicleaner is None:
        if strict:
            raise MissingScoreError("pair has no 'bicleaner' score")
    elif bicleaner < thresholds.bicleaner_min(pair.non_english_lang):
        return FilterVerdict.reject(Reason.BICLEANER, bicleaner)
    cometkiwi = pair.scores.get("cometkiwi")
    if cometkiwi is None:
        if strict:
            raise MissingScoreError("pair has no 'cometkiwi' score")
    elif cometkiwi < thresholds.cometkiwi_min:
        return FilterVerdict.reject(Reason.COMETKIWI, cometkiwi)
    return FilterVerdict.ok()


def pair_dedup_key(pair: SentencePair) -> DedupKey:
    """Order-sensitive key over the normalized source and target sides."""
    payload = normalize_for_dedup(pair.src_text) + "\t" + normalize_for_dedup(pair.tgt_text)
    return DedupKey(int.from_bytes(xxhash.xxh3_128_digest(payload.encode("utf-8")), "little"))
