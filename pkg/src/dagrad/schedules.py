"""Step-size and momentum schedules as pure functions of the step counter.

The per-step gradient weight is ``lambda_k = gamma_k * sqrt(k + 1)``, which
keeps the newest gradient's effective step size equal to ``gamma_k`` in the
dual-averaged iterate expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Constant:
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")


@dataclass(frozen=True)
class Stagewise:
    """Multiply gamma0 by ``factor`` once for every crossed boundary step."""

    gamma0: float
    boundaries: tuple[int, ...]
    factor: float

    def __post_init__(self):
        if self.gamma0 <= 0.0:
            raise ValueError("gamma0 must be > 0")
        if not 0.0 < self.factor <= 1.0:
            raise ValueError("factor must be in (0, 1]")
        bs = tuple(int(b) for b in self.boundaries)
        if any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
            raise ValueError("boundaries must be strictly increasing")
        object.__setattr__(self, "boundaries", bs)


@dataclass(frozen=True)
class SqrtDecay:
    """``gamma_k = a / sqrt(k + 1 + b)``: offset b on the 1-based step number."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.a <= 0.0 or self.b < 0.0:
            raise ValueError("need a > 0 and b >= 0")


@dataclass(frozen=True)
class InverseSqrtWarmup:
    """Linear ramp from 0 to ``peak`` over ``warmup_steps``, then sqrt decay.

    The ramp is exclusive of zero (gamma_0 = peak / warmup_steps) so that
    every step size stays positive.
    """

    peak: float
    warmup_steps: int

    def __post_init__(self):
        if self.peak <= 0.0 or self.warmup_steps < 1:
            raise ValueError("need peak > 0 and warmup_steps >= 1")


@dataclass(frozen=True)
class PolynomialDecay:
    """``gamma0 * (1 - k/end_step)^power``, frozen one step short of zero."""

    gamma0: float
    end_step: int
    power: float = 1.0

    def __post_init__(self):
        if self.gamma0 <= 0.0 or self.end_step < 1 or self.power < 0.0:
            raise ValueError("need gamma0 > 0, end_step >= 1, power >= 0")


StepSizeSchedule = Union[Constant, Stagewise, SqrtDecay, InverseSqrtWarmup, PolynomialDecay]


def step_size(sched: StepSizeSchedule, k: int) -> float:
    """Evaluate a step-size schedule at step ``k`` (0-based)."""
    if k < 0:
        raise ValueError("step index must be >= 0")
    if isinstance(sched, Constant):
        return sched.gamma
    if isinstance(sched, Stagewise):
        crossed = sum(1 for b in sched.boundaries if k >= b)
        return sched.gamma0 * sched.factor**crossed
    if isinstance(sched, SqrtDecay):
        return sched.a / math.sqrt(k + 1.0 + sched.b)
    if isinstance(sched, InverseSqrtWarmup):
        w = sched.warmup_steps
        if k < w:
            return sched.peak * (k + 1.0) / w
        return sched.peak * math.sqrt(w / (k + 1.0))
    if isinstance(sched, PolynomialDecay):
        kk = min(k, sched.end_step - 1)
        return sched.gamma0 * (1.0 - kk / sched.end_step) ** sched.power
    raise TypeError(f"unknown schedule {sched!r}")


def lambda_weight(gamma_k: float, k: int) -> float:
    """Per-step gradient weight ``gamma_k * sqrt(k + 1)``."""
    if gamma_k <= 0.0:
        raise ValueError("gamma_k must be > 0")
    if k < 0:
        raise ValueError("step index must be >= 0")
    return gamma_k * math.sqrt(k + 1.0)


@dataclass(frozen=True)
class ConstantC:
    c: float

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ValueError("c must be in (0, 1]")


@dataclass(frozen=True)
class DecayingC:
    """``c_k = (r + 1) / (k + j + r + 1)``.

    With j = 0 this gives c_0 = 1 and, at r = 1/2, the decaying sequence
    ``c_k = (3/2) / (k + 3/2)`` used by the convergence-rate preset.
    """

    r: float
    j: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError("r must be in (0, 1)")
        if self.j < 0.0:
            raise ValueError("j must be >= 0")


MomentumSchedule = Union[ConstantC, DecayingC]


def momentum_coeff(sched: MomentumSchedule, k: int) -> float:
    """Evaluate a momentum schedule at step ``k`` (0-based)."""
    if k < 0:
        raise ValueError("step index must be >= 0")
    if isinstance(sched, ConstantC):
        return sched.c
    if isinstance(sched, DecayingC):
        return (sched.r + 1.0) / (k + sched.j + sched.r + 1.0)
    raise TypeError(f"unknown momentum schedule {sched!r}")


def ck_lemma_violation(r: float, j: float, k_max: int) -> float:
    """Worst violation of the decreasing-coefficient inequality for the
    lemma's sequence ``c_k = (r+1)/(k+j+r)``.

    Returns ``max_k [ (1-c_k)/c_k * (k+j)^r - (1/c_{k-1}) * (k+j-1)^r ]``
    over 1 <= k <= k_max (nonpositive when the inequality holds).
    """
    if not 0.0 < r < 1.0:
        raise ValueError("r must be in (0, 1)")
    if j < 0.0:
        raise ValueError("j must be >= 0")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    import numpy as np

    k = np.arange(1, k_max + 1, dtype=np.float64)
    c_k = (r + 1.0) / (k + j + r)
    c_km1 = (r + 1.0) / (k - 1.0 + j + r)
    lhs = (1.0 - c_k) / c_k * (k + j) ** r
    rhs = (1.0 / c_km1) * (k + j - 1.0) ** r
    return float(np.max(lhs - rhs))


def check_ck_lemma(r: float, j: float, k_max: int, slack: float = 1e-12) -> bool:
    """True iff the lemma inequality holds at every 1 <= k <= k_max,
    with ``slack`` covering floating-point rounding."""
    return ck_lemma_violation(r, j, k_max) <= slack
