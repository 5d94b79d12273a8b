"""Phase-wise division of a token budget across English, code/math, and the
remaining languages.

Fixed category shares come from the training-phase presets; whatever remains
is split across the other languages proportionally to how many tokens
survived filtering for each (or by explicit override weights). Integer
budgets use largest-remainder apportionment so they sum exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ConfigError, ZeroAvailabilityError
from .records import Phase

ENGLISH = "en"
CODE_MATH = "code_math"
PARALLEL = "parallel"

_FIXED_SOURCES = (ENGLISH, CODE_MATH, PARALLEL)


@dataclass
class MixtureSpec:
    phase: Phase
    english_share: float
    codemath_share: float
    parallel_share: float | None = None
    language_availability: dict[str, float] = field(default_factory=dict)
    overrides: dict[str, float] | None = None
    max_repetition: float = 4.0

    def __post_init__(self) -> None:
        self.phase = Phase(self.phase)
        for name in ("english_share", "codemath_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.parallel_share is not None and not 0.0 <= self.parallel_share <= 1.0:
            raise ConfigError(f"parallel_share must be in [0, 1], got {self.parallel_share}")
        if self.fixed_total() > 1.0 + 1e-12:
            raise ConfigError("fixed shares exceed 1")
        if any(v < 0 for v in self.language_availability.values()):
            raise ConfigError("availability values must be >= 0")
        if self.max_repetition < 1.0:
            raise ConfigError("max_repetition must be >= 1")

    def fixed_total(self) -> float:
        return self.english_share + self.codemath_share + (self.parallel_share or 0.0)


@dataclass
class MixturePlan:
    phase: Phase
    total_tokens: int
    shares: dict[str, float]
    budgets: dict[str, int]
    repetition: dict[str, float]
    availability: dict[str, float]
    warnings: list[str]

    def to_tsv(self) -> str:
        lines = ["source\tshare\tbudget_tokens\trepetition\twarning"]
        warned = {w.split(":", 1)[0] for w in self.warnings}
        for source in self.shares:
            rep = self.repetition.get(source)
            lines.append("\t".join([
                source,
                f"{self.shares[source]:.9f}",
                str(self.budgets[source]),
                "" if rep is None else f"{rep:.4f}",
                "repetition" if source in warned else "",
            ]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "phase": self.phase.value,
            "total_tokens": self.total_tokens,
            "shares": self.shares,
            "budgets": self.budgets,
            "repetition": self.repetition,
            "availability": self.availability,
            "warnings": self.warnings,
        }, indent=2, ensure_ascii=False)


def _largest_remainder(shares: Mapping[str, float], total: int) -> dict[str, int]:
    quotas = {src: share * total for src, share in shares.items()}
    budgets = {src: math.floor(q) for src, q in quotas.items()}
    leftover = total - sum(budgets.values())
    # Distribute leftover units by descending fractional part, name as tie-break.
    order = sorted(shares, key=lambda src: (-(quotas[src] - budgets[src]), src))
    for src in order[:leftover]:
        budgets[src] += 1
    return budgets


def plan_phase(spec: MixtureSpec, phase_total_tokens: int) -> MixturePlan:
    """Allocate the phase token budget per source.

    English and code/math (and parallel, when set) take their fixed shares;
    the remainder goes to the other languages in proportion to availability,
    or to explicit override weights. Override values are weights and are
    normalized to fill the remainder.
    """
    if phase_total_tokens <= 0:
        raise ConfigError("phase_total_tokens must be > 0")
    remainder = 1.0 - spec.fixed_total()
    shares: dict[str, float] = {ENGLISH: spec.english_share, CODE_MATH: spec.codemath_share}
    if spec.parallel_share is not None:
        shares[PARALLEL] = spec.parallel_share

    if remainder > 1e-12:
        if spec.overrides:
            weights = dict(spec.overrides)
        else:
            weights = {lang: avail for lang, avail in spec.language_availability.items()
                       if lang not in _FIXED_SOURCES}
        weight_total = sum(weights.values())
        if weight_total <= 0:
            raise ConfigError(
                "no availability for the remainder split; supply availability or overrides")
        for lang in sorted(weights):
            shares[lang] = remainder * weights[lang] / weight_total

    budgets = _largest_remainder(shares, phase_total_tokens)
    repetition: dict[str, float] = {}
    warnings: list[str] = []
    for source, budget in budgets.items():
        avail = spec.language_availability.get(source)
        if avail:
            repetition[source] = budget / avail
            if repetition[source] > spec.max_repetition:
                warnings.append(
                    f"{source}: repetition {repetition[source]:.2f} exceeds "
                    f"max {spec.max_repetition:g}")
    return MixturePlan(
        phase=spec.phase,
        total_tokens=phase_total_tokens,
        shares=shares,
        budgets=budgets,
        repetition=repetition,
        availability=dict(spec.language_availability),
        warnings=warnings,
    )


def phase_presets() -> dict[str, MixtureSpec]:
    """Published category shares for the three phases and the six mixture
    experiments that led to the phase-2/phase-3 choices."""
    def spec(phase: Phase, en: float, cm: float, parallel: float | None = None) -> MixtureSpec:
        return MixtureSpec(phase=phase, english_share=en, codemath_share=cm,
                           parallel_share=parallel)

    return {
        "P1": spec(Phase.P1, 0.50, 0.05),
        "P2": spec(Phase.P2, 0.325, 0.07),
        "P3": spec(Phase.P3, 0.325, 0.23),
        "P2-v1": spec(Phase.P2, 0.48, 0.07),
        "P2-v2": spec(Phase.P2, 0.40, 0.15),
        "P2-v3": spec(Phase.P2, 0.325, 0.07),
        "P3-v1": spec(Phase.P3, 0.30, 0.095),
        "P3-v2": spec(Phase.P3, 0.325, 0.23),
        "P3-v3": spec(Phase.P3, 0.325, 0.23, parallel=0.02),
    }


def sampling_weights(plan: MixturePlan) -> dict[str, float]:
    """Per-record sampling weight per source: share / availability, normalized.

    Sampling records with these weights reproduces the plan shares in
    expectation. Every source with positive share must have availability.
    """
    raw: dict[str, float] = {}
    for source, share in plan.shares.items():
        if share <= 0:
            continue
        avail = plan.availability.get(source, 0.0)
        if avail <= 0:
            raise ZeroAvailabilityError(
                f"source {source!r} has share {share:g} but no available tokens")
        raw[source] = share / avail
    total = sum(raw.values())
    if total == 0:
        raise ConfigError("plan has no positive shares")
    return {source: w / total for source, w in raw.items()}
