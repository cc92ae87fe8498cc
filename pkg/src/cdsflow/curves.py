"""Interest and hazard term structures.

Conventions used throughout the engine:

* times are raw year fractions, rates are decimal fractions per annum;
* interest: continuously compounded zero rate, linear in time between
  nodes, ``D(t) = exp(-r(t) t)``;
* hazard: piecewise-constant forward intensity. Node ``i`` applies on
  ``[t_i, t_{i+1})``, the first node also covers ``[0, t_0)`` and the last
  node extends to infinity. ``S(t) = exp(-H(t))`` with ``H`` the integral;
* both curves extrapolate flat.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DomainError, ValidationError
from .reduce import DEFAULT_LANES, strided_weighted_sum


class CurveKind(enum.Enum):
    INTEREST = "interest"
    HAZARD = "hazard"

    @classmethod
    def parse(cls, value: "CurveKind | str") -> "CurveKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown curve kind {value!r}") from None


class RatePoint(NamedTuple):
    time: float
    value: float


@dataclass(frozen=True, eq=False)
class TermStructure:
    """Immutable curve of ``(time, rate)`` nodes.

    Arrays are read-only so one instance can be shared by every stage and
    engine without copying.
    """

    times: np.ndarray
    rates: np.ndarray
    kind: CurveKind = field(default=CurveKind.INTEREST)

    def __post_init__(self) -> None:
        kind = CurveKind.parse(self.kind)
        times = np.array(self.times, dtype=np.float64).reshape(-1)
        rates = np.array(self.rates, dtype=np.float64).reshape(-1)
        _validate(times, rates, kind)
        times.setflags(write=False)
        rates.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def from_nodes(
        cls, nodes: Iterable[tuple[float, float]], kind: CurveKind | str
    ) -> "TermStructure":
        pts = [(float(t), float(r)) for t, r in nodes]
        if not pts:
            raise ValidationError("term structure needs at least one node")
        times, rates = zip(*pts)
        return cls(np.array(times), np.array(rates), CurveKind.parse(kind))

    @classmethod
    def flat(cls, rate: float, kind: CurveKind | str, horizon: float = 1.0) -> "TermStructure":
        return cls(np.array([horizon]), np.array([rate]), CurveKind.parse(kind))

    @property
    def nodes(self) -> list[RatePoint]:
        return [RatePoint(float(t), float(r)) for t, r in zip(self.times, self.rates)]

    def __len__(self) -> int:
        return len(self.times)

    def __repr__(self) -> str:
        return f"TermStructure(kind={self.kind.value}, nodes={len(self)})"

    def same_values(self, other: "TermStructure") -> bool:
        return (
            self.kind is other.kind
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.rates, other.rates)
        )

    # Scalar lookups from Python lists are much cheaper than numpy scalars.
    @cached_property
    def _tlist(self) -> list[float]:
        return self.times.tolist()

    @cached_property
    def _rlist(self) -> list[float]:
        return self.rates.tolist()

    @cached_property
    def segments(self) -> "HazardSegments":
        return HazardSegments.build(self)

    @cached_property
    def _seglists(self) -> tuple[list[float], list[float], list[float]]:
        seg = self.segments
        return seg.lo.tolist(), seg.h.tolist(), seg.prefix.tolist()


def _validate(times: np.ndarray, rates: np.ndarray, kind: CurveKind) -> None:
    if times.size == 0:
        raise ValidationError("term structure needs at least one node")
    if times.shape != rates.shape:
        raise ValidationError("times and rates differ in length")
    if not np.all(np.isfinite(times)):
        raise ValidationError(f"non-finite node time at node {_first(~np.isfinite(times))}")
    if not np.all(np.isfinite(rates)):
        raise ValidationError(f"non-finite rate at node {_first(~np.isfinite(rates))}")
    if times[0] < 0.0:
        raise ValidationError("node times must be >= 0 (node 0)")
    bad = np.diff(times) <= 0.0
    if bad.any():
        raise ValidationError(f"node times must be strictly increasing (node {_first(bad) + 1})")
    if kind is CurveKind.HAZARD and (rates < 0.0).any():
        raise ValidationError(f"hazard rates must be >= 0 (node {_first(rates < 0.0)})")


def _first(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


class HazardSegments(NamedTuple):
    """Integration segments of a piecewise-constant hazard curve.

    Segment ``j`` spans ``[lo[j], hi[j])`` at intensity ``h[j]``; the first
    segment is ``[0, t_0)`` at the first node's value and the last one is
    open-ended. ``prefix[j]`` is the left-fold sum of the full segments
    before ``j``.
    """

    lo: np.ndarray
    hi: np.ndarray
    h: np.ndarray
    prefix: np.ndarray

    @classmethod
    def build(cls, hazard: TermStructure) -> "HazardSegments":
        t, r = hazard.times, hazard.rates
        lo = np.concatenate(([0.0], t))
        hi = np.concatenate((t, [math.inf]))
        h = np.concatenate((r[:1], r))
        prefix = np.empty_like(lo)
        acc = 0.0
        for j in range(len(lo)):
            prefix[j] = acc
            if j < len(lo) - 1:
                acc += float(h[j]) * (float(hi[j]) - float(lo[j]))
        for a in (lo, hi, h, prefix):
            a.setflags(write=False)
        return cls(lo, hi, h, prefix)

    def contributions(self, t: float) -> list[tuple[float, float]]:
        """``(intensity, overlap)`` for every segment intersecting ``[0, t]``."""
        out = []
        for j in range(len(self.lo)):
            lo = float(self.lo[j])
            if not lo < t:
                break
            out.append((float(self.h[j]), min(t, float(self.hi[j])) - lo))
        return out


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise ValidationError(f"time must be finite, got {t!r}")
    if t < 0.0:
        raise ValidationError(f"time must be >= 0, got {t!r}")
    return t


def _expect(ts: TermStructure, kind: CurveKind) -> None:
    if ts.kind is not kind:
        raise ValidationError(f"expected a {kind.value} curve, got {ts.kind.value}")


def interpolate_rate(ts: TermStructure, t: float) -> float:
    """Linear interpolation between nodes, flat beyond either end."""
    t = _check_time(t)
    times, rates = ts._tlist, ts._rlist
    i = bisect_right(times, t) - 1
    if i < 0:
        return rates[0]
    if i >= len(times) - 1:
        return rates[-1]
    t0, t1 = times[i], times[i + 1]
    r0, r1 = rates[i], rates[i + 1]
    return r0 + (r1 - r0) * (t - t0) / (t1 - t0)


def discount_factor(interest: TermStructure, t: float) -> float:
    _expect(interest, CurveKind.INTEREST)
    t = _check_time(t)
    try:
        return math.exp(-interpolate_rate(interest, t) * t)
    except OverflowError:
        raise DomainError(f"discount factor overflows at t={t!r}") from None


def cumulative_hazard(hazard: TermStructure, t: float, lanes: int | None = None) -> float:
    """Integrated hazard ``H(t)``.

    With ``lanes=None`` the segment contributions are summed by a plain
    left fold (served from the precomputed prefix, which is the same fold);
    otherwise they go through :func:`strided_weighted_sum`.
    """
    _expect(hazard, CurveKind.HAZARD)
    t = _check_time(t)
    seg = hazard.segments
    if lanes is not None:
        return strided_weighted_sum(seg.contributions(t), lanes)
    lo, h, prefix = hazard._seglists
    k = bisect_left(lo, t) - 1
    if k < 0:
        return 0.0
    return prefix[k] + h[k] * (t - lo[k])


def survival_probability(hazard: TermStructure, t: float, lanes: int | None = None) -> float:
    return math.exp(-cumulative_hazard(hazard, t, lanes))


def default_probability(hazard: TermStructure, t: float, lanes: int | None = None) -> float:
    return 1.0 - survival_probability(hazard, t, lanes)


__all__ = [
    "CurveKind",
    "DEFAULT_LANES",
    "HazardSegments",
    "RatePoint",
    "TermStructure",
    "cumulative_hazard",
    "default_probability",
    "discount_factor",
    "interpolate_rate",
    "survival_probability",
]
