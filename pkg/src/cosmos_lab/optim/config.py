"""Hyperparameter containers and the warmup + linear-decay schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from ..errors import ConfigError

ALGORITHMS = ("adam", "muon", "soap1", "cosmos", "cosmos2")
MATRIX_ALGORITHMS = ("muon", "soap1", "cosmos", "cosmos2")


@dataclass(frozen=True)
class ScheduleConfig:
    base_lr: float
    total_steps: int
    warmup_fraction: float = 0.1

    def __post_init__(self):
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1", "steps")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must lie in [0, 1)", "optimizer.warmup")
        if self.warmup_fraction > 0 and self.warmup_steps < 1:
            raise ConfigError("warmup_fraction * total_steps must be >= 1", "optimizer.warmup")

    @property
    def warmup_steps(self) -> int:
        return int(round(self.warmup_fraction * self.total_steps))


def lr_at(sched: ScheduleConfig, t: int) -> float:
    """Learning rate at step ``t`` (0-based).

    Ramps linearly up to ``base_lr`` at step ``w - 1`` and then decays
    linearly to zero at ``total_steps``.
    """
    T, w = sched.total_steps, sched.warmup_steps
    if not 0 <= t <= T:
        raise ValueError(f"step {t} outside [0, {T}]")
    if t < w:
        return sched.base_lr * (t + 1) / w
    return sched.base_lr * (T - t) / (T - w)


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "cosmos"
    lr: float = 5e-4
    lr_adam: float = 2e-3
    gamma: Union[float, str] = "auto"
    rank: int = 64
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-8
    mu: float = 0.9
    warmup_fraction: float = 0.1
    soap_l_literal: bool = False
    cosmos2_sqrt_m: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}",
                              "optimizer.name")
        for key in ("lr", "lr_adam", "eps"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigError("must be a positive finite number", f"optimizer.{key}")
        for key in ("beta1", "beta2", "mu"):
            value = getattr(self, key)
            if not 0.0 <= value < 1.0:
                raise ConfigError("must lie in [0, 1)", f"optimizer.{key}")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma >= 0):
            raise ConfigError("must be a non-negative number or 'auto'", "optimizer.gamma")
        if isinstance(self.rank, bool) or not isinstance(self.rank, int) or self.rank < 1:
            raise ConfigError("must be an integer >= 1", "optimizer.rank")

    @property
    def effective_gamma(self) -> float:
        """The combination weight; ``"auto"`` means lr / lr_adam of the base rates."""
        if self.gamma == "auto":
            return self.lr / self.lr_adam
        return float(self.gamma)

    def schedule(self, total_steps: int, base_lr: float) -> ScheduleConfig:
        return ScheduleConfig(base_lr, total_steps, self.warmup_fraction)
