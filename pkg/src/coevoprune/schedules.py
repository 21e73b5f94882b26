"""Epoch-indexed pruning probability schedules.

A schedule answers "with what probability does a pruning event fire at
epoch t", separate from how much an operator removes when it fires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SCHEDULE_KINDS = ("fixed", "increase", "decrease", "population", "exponential", "final_n")


@dataclass(frozen=True)
class ScheduleSpec:
    """kind plus its parameters: base probability C, horizon T, and the
    final-window length t_p (final_n only, defaults to ceil(0.1 * T))."""

    kind: str
    C: float = 0.5
    T: int = 400
    t_p: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not 0.0 <= self.C <= 1.0:
            raise ValueError(f"schedule C must be in [0,1], got {self.C}")
        if self.T < 0:
            raise ValueError(f"schedule T must be >= 0, got {self.T}")
        if self.kind == "final_n":
            tp = self.final_window
            if not 1 <= tp <= max(self.T, 1):
                raise ValueError(f"final_n window t_p={tp} must be in [1, T={self.T}]")

    @property
    def final_window(self) -> int:
        if self.t_p is not None:
            return self.t_p
        return max(1, math.ceil(0.1 * self.T))


def prune_probability(spec: ScheduleSpec, t: int, neighborhood_size: int = 1) -> float:
    """Closed-form p_p(t) for the given schedule, clamped to [0, 1].

    fixed       -> C
    increase    -> C * t / T
    decrease    -> C * (1 - t / T)
    population  -> C / neighborhood_size
    exponential -> C * (1 - exp(-2 t / T))
    final_n     -> C in the last t_p epochs, else 0
    """
    if t < 0 or t > spec.T:
        raise ValueError(f"epoch t={t} outside [0, {spec.T}]")
    if neighborhood_size < 1:
        raise ValueError(f"neighborhood_size must be >= 1, got {neighborhood_size}")
    ratio = t / spec.T if spec.T > 0 else 0.0
    if spec.kind == "fixed":
        p = spec.C
    elif spec.kind == "increase":
        p = spec.C * ratio
    elif spec.kind == "decrease":
        p = spec.C * (1.0 - ratio)
    elif spec.kind == "population":
        p = spec.C / neighborhood_size
    elif spec.kind == "exponential":
        p = spec.C * (1.0 - math.exp(-2.0 * t / spec.T)) if spec.T > 0 else 0.0
    else:  # final_n
        p = spec.C if t > spec.T - spec.final_window else 0.0
    return min(1.0, max(0.0, p))
