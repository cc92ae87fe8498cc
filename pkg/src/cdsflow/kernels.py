"""Compiled per-frame kernels used by the pipeline stages.

All kernels release the GIL so replicated workers and independent engines
can overlap on multi-core hosts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .curves import CurveKind, TermStructure
from .errors import ValidationError
from .reduce import lanes_add, lanes_fold


@dataclass(frozen=True, eq=False)
class CurveTables:
    """Flat arrays of both curves, built once and shared read-only."""

    rate_times: np.ndarray
    rate_values: np.ndarray
    seg_lo: np.ndarray
    seg_hi: np.ndarray
    seg_h: np.ndarray

    @classmethod
    def build(cls, interest: TermStructure, hazard: TermStructure) -> "CurveTables":
        if interest.kind is not CurveKind.INTEREST:
            raise ValidationError("first curve must be an interest curve")
        if hazard.kind is not CurveKind.HAZARD:
            raise ValidationError("second curve must be a hazard curve")
        seg = hazard.segments
        return cls(interest.times, interest.rates, seg.lo, seg.hi, seg.h)

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.rate_times, self.rate_values,
                                      self.seg_lo, self.seg_hi, self.seg_h))


@njit(cache=True, nogil=True, inline="always")
def _interp(times, rates, t):
    i = np.searchsorted(times, t, side="right") - 1
    if i < 0:
        return rates[0]
    if i >= times.shape[0] - 1:
        return rates[times.shape[0] - 1]
    t0 = times[i]
    r0 = rates[i]
    return r0 + (rates[i + 1] - r0) * (t - t0) / (times[i + 1] - t0)


@njit(cache=True, nogil=True)
def survival_discount_frame(t, tprev, seg_lo, seg_hi, seg_h, rate_times, rate_values,
                            lanes, out_s, out_d, out_dm):
    """Per point: survival at ``t`` plus discount factors at ``t`` and the midpoint.

    The hazard integral is a lane-striped sum over segment contributions;
    segment ``j`` always lands in lane ``j % lanes``.
    """
    acc = np.zeros(lanes, dtype=np.float64)
    nseg = seg_lo.shape[0]
    for p in range(t.shape[0]):
        tp = t[p]
        for j in range(lanes):
            acc[j] = 0.0
        for j in range(nseg):
            lo = seg_lo[j]
            if not lo < tp:
                break
            lanes_add(acc, j, seg_h[j] * (min(tp, seg_hi[j]) - lo))
        out_s[p] = math.exp(-lanes_fold(acc))
        out_d[p] = math.exp(-_interp(rate_times, rate_values, tp) * tp)
        mid = (tprev[p] + tp) / 2.0
        out_dm[p] = math.exp(-_interp(rate_times, rate_values, mid) * mid)


@njit(cache=True, nogil=True)
def fold_per_option(last, prem, dflt, accr, carry, out):
    """Left-fold the three per-point contributions per option.

    ``carry`` holds the running sums of an option still open from the
    previous frame and is updated in place. Completed options are written
    to ``out`` rows in order; returns how many were completed.
    """
    n_done = 0
    a = carry[0]
    b = carry[1]
    c = carry[2]
    for p in range(last.shape[0]):
        a += prem[p]
        b += dflt[p]
        c += accr[p]
        if last[p]:
            out[n_done, 0] = a
            out[n_done, 1] = b
            out[n_done, 2] = c
            n_done += 1
            a = 0.0
            b = 0.0
            c = 0.0
    carry[0] = a
    carry[1] = b
    carry[2] = c
    return n_done
