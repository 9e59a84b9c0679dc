"""Budget-allocation policies and their materialized schedules.

A policy fixes, in advance, how many selected samples ``n_t`` each
iteration of the bootstrapping loop receives. Policy families are small
frozen dataclasses; :func:`materialize` turns a family plus a horizon
``T`` into a concrete integer :class:`Schedule`. The budget-matched
constructors build the constant and linear schemes whose totals track a
reference exponential scheme.

Real-valued formulas are floored to integers. Flooring can produce a
zero count, which would leave an iteration with an empty batch; such
entries are clamped to 1 and the schedule is flagged ``clamped``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence, Union

__all__ = [
    "Constant",
    "Polynomial",
    "Exponential",
    "Explicit",
    "BatchConstant",
    "BatchLinear",
    "BatchExponential",
    "PolicySpec",
    "Schedule",
    "materialize",
    "budget_matched_constant",
    "budget_matched_linear",
    "total_selected",
    "is_increasing",
]


def _check_positive_int(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")


def _check_positive(name: str, value: float) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite real, got {value!r}")


@dataclass(frozen=True)
class Constant:
    """n_t = n0 for every iteration."""

    n0: int

    def __post_init__(self) -> None:
        _check_positive_int("n0", self.n0)


@dataclass(frozen=True)
class Polynomial:
    """n_t = n0 * (1+t)**alpha, floored."""

    n0: int
    alpha: float

    def __post_init__(self) -> None:
        _check_positive_int("n0", self.n0)
        _check_positive("alpha", self.alpha)


@dataclass(frozen=True)
class Exponential:
    """n_t = n0 * (1+u)**t, floored."""

    n0: int
    u: float

    def __post_init__(self) -> None:
        _check_positive_int("n0", self.n0)
        _check_positive("u", self.u)


@dataclass(frozen=True)
class Explicit:
    """A literal list of per-iteration counts."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if not self.counts:
            raise ValueError("Explicit policy needs a non-empty count list")
        for c in self.counts:
            _check_positive_int("explicit count", c)


@dataclass(frozen=True)
class BatchConstant:
    """n_t = floor(n) * B; counts are integer multiples of a batch size."""

    n: float
    B: int

    def __post_init__(self) -> None:
        _check_positive("n", self.n)
        _check_positive_int("B", self.B)


@dataclass(frozen=True)
class BatchLinear:
    """n_t = floor(n * (t+1)) * B."""

    n: float
    B: int

    def __post_init__(self) -> None:
        _check_positive("n", self.n)
        _check_positive_int("B", self.B)


@dataclass(frozen=True)
class BatchExponential:
    """n_t = floor(n * (1+u)**t) * B."""

    n: float
    u: float
    B: int

    def __post_init__(self) -> None:
        _check_positive("n", self.n)
        _check_positive("u", self.u)
        _check_positive_int("B", self.B)


PolicySpec = Union[
    Constant,
    Polynomial,
    Exponential,
    Explicit,
    BatchConstant,
    BatchLinear,
    BatchExponential,
]


@dataclass(frozen=True)
class Schedule:
    """A concrete per-iteration sample-count sequence.

    Attributes
    ----------
    n : tuple of int
        Selected-sample counts, one per iteration; every entry >= 1.
    family_tag : str
        Provenance of construction (e.g. ``"exponential(n0=10,u=0.5)"``).
    clamped : bool
        True when flooring produced a zero that was clamped to 1.
    """

    n: tuple[int, ...]
    family_tag: str = "explicit"
    clamped: bool = False

    def __post_init__(self) -> None:
        if not self.n:
            raise ValueError("Schedule must have at least one iteration")
        if any((not isinstance(v, int)) or v < 1 for v in self.n):
            raise ValueError(f"all schedule entries must be integers >= 1: {self.n}")

    def __len__(self) -> int:
        return len(self.n)


def _clamp(raw: Sequence[int], tag: str) -> Schedule:
    clamped = any(v < 1 for v in raw)
    return Schedule(tuple(max(1, int(v)) for v in raw), family_tag=tag, clamped=clamped)


def materialize(spec: PolicySpec, T: int) -> Schedule:
    """Evaluate a policy family over the horizon ``t = 0..T-1``.

    Real-valued families are floored entrywise, then clamped to >= 1.
    Raises ``ValueError`` for T < 1 or an Explicit spec whose length is
    not T.
    """
    _check_positive_int("T", T)
    if isinstance(spec, Constant):
        return Schedule((spec.n0,) * T, family_tag=f"constant(n0={spec.n0})")
    if isinstance(spec, Polynomial):
        raw = [math.floor(spec.n0 * (1 + t) ** spec.alpha) for t in range(T)]
        return _clamp(raw, f"polynomial(n0={spec.n0},alpha={spec.alpha})")
    if isinstance(spec, Exponential):
        raw = [math.floor(spec.n0 * (1 + spec.u) ** t) for t in range(T)]
        return _clamp(raw, f"exponential(n0={spec.n0},u={spec.u})")
    if isinstance(spec, Explicit):
        if len(spec.counts) != T:
            raise ValueError(
                f"Explicit policy has {len(spec.counts)} entries but T={T}"
            )
        return Schedule(spec.counts, family_tag="explicit")
    if isinstance(spec, BatchConstant):
        raw = [math.floor(spec.n) * spec.B] * T
        return _clamp(raw, f"batch_constant(n={spec.n},B={spec.B})")
    if isinstance(spec, BatchLinear):
        raw = [math.floor(spec.n * (t + 1)) * spec.B for t in range(T)]
        return _clamp(raw, f"batch_linear(n={spec.n},B={spec.B})")
    if isinstance(spec, BatchExponential):
        raw = [math.floor(spec.n * (1 + spec.u) ** t) * spec.B for t in range(T)]
        return _clamp(raw, f"batch_exponential(n={spec.n},u={spec.u},B={spec.B})")
    raise TypeError(f"unknown policy spec: {spec!r}")


def _exponential_total(n0: int, u: float, T: int) -> float:
    # Pre-floor total of the reference exponential scheme.
    return sum(n0 * (1 + u) ** k for k in range(T))


def budget_matched_constant(n0: int, u: float, T: int) -> Schedule:
    """Constant scheme whose per-iteration count is the mean of the
    exponential scheme ``n0*(1+u)**t`` over the same horizon, floored."""
    _check_positive_int("n0", n0)
    _check_positive("u", u)
    _check_positive_int("T", T)
    value = math.floor(_exponential_total(n0, u, T) / T)
    return _clamp([value] * T, f"budget_constant(n0={n0},u={u},T={T})")


def budget_matched_linear(
    n0: int,
    u: float,
    T: int,
    normalization: Literal["verbatim", "exact"] = "verbatim",
) -> Schedule:
    """Linearly growing scheme matched to the exponential scheme's total.

    ``verbatim`` uses the T*(T-1) denominator as printed in the source
    construction; its pre-floor total overshoots the exponential total
    by a factor (T+1)/(T-1). ``exact`` uses T*(T+1), which makes the
    pre-floor totals equal. ``verbatim`` requires T >= 2.
    """
    _check_positive_int("n0", n0)
    _check_positive("u", u)
    _check_positive_int("T", T)
    if normalization not in ("verbatim", "exact"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if normalization == "verbatim" and T < 2:
        raise ValueError("verbatim linear normalization needs T >= 2")
    total = _exponential_total(n0, u, T)
    denom = T * (T - 1) if normalization == "verbatim" else T * (T + 1)
    raw = [math.floor(2 * (t + 1) / denom * total) for t in range(T)]
    return _clamp(raw, f"budget_linear(n0={n0},u={u},T={T},{normalization})")


def total_selected(s: Schedule) -> int:
    """Sum of the schedule's selected-sample counts."""
    return sum(s.n)


def is_increasing(s: Schedule) -> bool:
    """True iff n_t <= n_{t+1} everywhere with at least one strict increase."""
    pairs = list(zip(s.n, s.n[1:]))
    return all(a <= b for a, b in pairs) and any(a < b for a, b in pairs)
