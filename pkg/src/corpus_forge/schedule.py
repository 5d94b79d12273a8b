"""Trapezoid (warmup-stable-decay) learning-rate schedule with a final
anneal-to-zero tail, evaluated as a pure function of the step.

Defaults follow the 9B training run: peak 3e-4, 10% warmup, 80% plateau,
10% decay to a 3e-5 floor, then a short linear anneal to zero sized at
roughly 40B tokens given 12M tokens per step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

from .errors import ConfigError, StepOutOfRangeError

FINAL_ANNEAL_TOKENS = 40_000_000_000


class SchedulePhase(str, enum.Enum):
    WARMUP = "WARMUP"
    STABLE = "STABLE"
    DECAY = "DECAY"
    FINAL_ANNEAL = "FINAL_ANNEAL"
    DONE = "DONE"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class ScheduleConfig:
    main_steps: int
    peak_lr: float = 3e-4
    warmup_frac: float = 0.10
    decay_frac: float = 0.10
    decay_floor_ratio: float = 0.10
    final_anneal_steps: int | None = None
    tokens_per_step: int = 12_000_000

    def __post_init__(self) -> None:
        if self.main_steps <= 0:
            raise ConfigError("main_steps must be > 0")
        if self.peak_lr <= 0:
            raise ConfigError("peak_lr must be > 0")
        if self.tokens_per_step <= 0:
            raise ConfigError("tokens_per_step must be > 0")
        if self.warmup_frac < 0 or self.decay_frac < 0 or self.warmup_frac + self.decay_frac > 1:
            raise ConfigError("need warmup_frac, decay_frac >= 0 with sum <= 1")
        if not 0.0 <= self.decay_floor_ratio <= 1.0:
            raise ConfigError("decay_floor_ratio must be in [0, 1]")
        if self.final_anneal_steps is None:
            self.final_anneal_steps = _round_half_up(FINAL_ANNEAL_TOKENS / self.tokens_per_step)
        if self.final_anneal_steps < 0:
            raise ConfigError("final_anneal_steps must be >= 0")

    @property
    def floor_lr(self) -> float:
        return self.decay_floor_ratio * self.peak_lr


@dataclass(frozen=True)
class LrPoint:
    step: int
    lr: float
    phase: SchedulePhase


def phase_boundaries(cfg: ScheduleConfig) -> tuple[int, int, int, int]:
    """(warmup_end, stable_end, decay_end, final_end), rounded half-up."""
    warmup_end = _round_half_up(cfg.warmup_frac * cfg.main_steps)
    stable_end = _round_half_up((1.0 - cfg.decay_frac) * cfg.main_steps)
    decay_end = cfg.main_steps
    final_end = cfg.main_steps + cfg.final_anneal_steps
    return warmup_end, stable_end, decay_end, final_end


def _interp(start: float, end: float, lo: int, hi: int, step: int) -> float:
    # (1-t)*start + t*end hits both endpoints exactly in floating point.
    t = (step - lo) / (hi - lo)
    return (1.0 - t) * start + t * end


def lr_at(cfg: ScheduleConfig, step: int) -> LrPoint:
    """Learning rate and phase at an integer step in [0, final_end]."""
    warmup_end, stable_end, decay_end, final_end = phase_boundaries(cfg)
    if not 0 <= step <= final_end:
        raise StepOutOfRangeError(f"step {step} outside [0, {final_end}]")
    if step <= warmup_end and warmup_end > 0:
        lr = _interp(0.0, cfg.peak_lr, 0, warmup_end, step)
        phase = SchedulePhase.WARMUP
    elif step <= stable_end:
        lr = cfg.peak_lr
        phase = SchedulePhase.STABLE
    elif step <= decay_end:
        lr = _interp(cfg.peak_lr, cfg.floor_lr, stable_end, decay_end, step)
        phase = SchedulePhase.DECAY
    else:
        # With decay_frac 0 the decay segment is empty and the anneal starts
        # from the plateau, keeping the curve continuous.
        anneal_from = cfg.floor_lr if stable_end < decay_end else cfg.peak_lr
        lr = _interp(anneal_from, 0.0, decay_end, final_end, step)
        phase = SchedulePhase.FINAL_ANNEAL
    if step == final_end:
        phase = SchedulePhase.DONE
    return LrPoint(step=step, lr=lr, phase=phase)


def emit_schedule(cfg: ScheduleConfig, sample_every: int = 1) -> list[LrPoint]:
    """Sample the schedule at steps 0, k, 2k, ...; final_end always included."""
    if sample_every < 1:
        raise ConfigError("sample_every must be >= 1")
    final_end = phase_boundaries(cfg)[3]
    steps = list(range(0, final_end + 1, sample_every))
    if steps[-1] != final_end:
        steps.append(final_end)
    return [lr_at(cfg, step) for step in steps]


def schedule_tsv(points: list[LrPoint]) -> Iterator[str]:
    yield "step\tlr\tphase\n"
    for p in points:
        yield f"{p.step}\t{p.lr:.12e}\t{p.phase.value}\n"


def decay_phase_tokens(cfg: ScheduleConfig) -> int:
    """Token mass processed during the decay phase."""
    warmup_end, stable_end, decay_end, _ = phase_boundaries(cfg)
    return (decay_end - stable_end) * cfg.tokens_per_step
