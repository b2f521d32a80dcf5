"""Learning-rate multipliers. ``Schedule(t)`` returns eta_t / eta."""

from __future__ import annotations

import math
from dataclasses import dataclass

KINDS = ("constant", "cosine", "cosine-with-warmup")


@dataclass(frozen=True)
class Schedule:
    kind: str = "constant"
    total_steps: int = 1
    warmup_steps: int = 0
    floor_fraction: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {KINDS}")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if not 0.0 <= self.floor_fraction <= 1.0:
            raise ValueError("floor_fraction must lie in [0, 1]")

    def __call__(self, t: int) -> float:
        if self.kind == "constant":
            return 1.0
        warm = self.warmup_steps if self.kind == "cosine-with-warmup" else 0
        warm = min(warm, self.total_steps)
        if t < warm:
            # (t+1)/warm keeps the multiplier strictly positive from t = 0
            return (t + 1) / warm
        span = self.total_steps - warm
        if span <= 0 or t >= self.total_steps:
            return self.floor_fraction
        frac = (t - warm) / span
        cos = 0.5 * (1.0 + math.cos(math.pi * frac))
        return self.floor_fraction + (1.0 - self.floor_fraction) * cos
