"""Lane-striped accumulation.

A running sum ``acc += x`` carries a dependency from one addition to the
next. Striping the accumulator over ``lanes`` independent partial sums
(element ``k`` goes to lane ``k % lanes``) removes that dependency; the
partials are folded left to right at the end.

The jitted helpers (``lanes_new``, ``lanes_add``, ``lanes_fold``) are the
building blocks used by the pipeline's survival kernel, so the kernel and
the public ``strided_sum`` share one lane-assignment rule.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import ValidationError

DEFAULT_LANES = 7


@njit(cache=True, nogil=True, inline="always")
def lanes_new(lanes):
    return np.zeros(lanes, dtype=np.float64)


@njit(cache=True, nogil=True, inline="always")
def lanes_add(acc, k, x):
    acc[k % acc.shape[0]] += x


@njit(cache=True, nogil=True, inline="always")
def lanes_fold(acc):
    total = 0.0
    for j in range(acc.shape[0]):
        total += acc[j]
    return total


@njit(cache=True, nogil=True)
def _strided_sum_kernel(values, lanes):
    acc = lanes_new(lanes)
    n = values.shape[0]
    full = n - n % lanes
    # whole rows of `lanes` values, then the ragged tail
    for i in range(0, full, lanes):
        for j in range(lanes):
            acc[j] += values[i + j]
    for k in range(full, n):
        lanes_add(acc, k, values[k])
    return lanes_fold(acc)


@njit(cache=True, nogil=True)
def _strided_weighted_sum_kernel(weights, values, lanes):
    acc = lanes_new(lanes)
    for k in range(values.shape[0]):
        lanes_add(acc, k, weights[k] * values[k])
    return lanes_fold(acc)


def _check_lanes(lanes: int) -> int:
    if isinstance(lanes, bool) or int(lanes) != lanes or lanes < 1:
        raise ValidationError(f"lanes must be a positive integer, got {lanes!r}")
    return int(lanes)


def strided_sum(values: Sequence[float] | np.ndarray, lanes: int = DEFAULT_LANES) -> float:
    """Sum ``values`` through ``lanes`` striped partial sums.

    With ``lanes == 1`` this is exactly the naive left fold. Lengths that do
    not divide evenly by ``lanes`` are handled; an empty input sums to 0.0.
    """
    lanes = _check_lanes(lanes)
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError("values must be one-dimensional")
    return float(_strided_sum_kernel(arr, lanes))


def strided_weighted_sum(
    pairs: Iterable[tuple[float, float]] | np.ndarray, lanes: int = DEFAULT_LANES
) -> float:
    """Strided sum of ``weight * value`` over ``(weight, value)`` pairs."""
    lanes = _check_lanes(lanes)
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                     dtype=np.float64)
    if arr.size == 0:
        return 0.0
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("pairs must be a sequence of (weight, value)")
    w = np.ascontiguousarray(arr[:, 0])
    v = np.ascontiguousarray(arr[:, 1])
    return float(_strided_weighted_sum_kernel(w, v, lanes))


class LaneAccumulator:
    """Incremental form of :func:`strided_sum` for streaming producers.

    >>> acc = LaneAccumulator(3)
    >>> for x in range(10):
    ...     acc.add(float(x))
    >>> acc.fold()
    45.0
    """

    __slots__ = ("partials", "count")

    def __init__(self, lanes: int = DEFAULT_LANES) -> None:
        self.partials = [0.0] * _check_lanes(lanes)
        self.count = 0

    @property
    def lanes(self) -> int:
        return len(self.partials)

    def add(self, x: float) -> None:
        self.partials[self.count % len(self.partials)] += x
        self.count += 1

    def fold(self) -> float:
        total = 0.0
        for p in self.partials:
            total += p
        return total
