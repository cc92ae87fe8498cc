"""Option records and their premium time grids."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

GRID_TOL = 1e-12


@dataclass(frozen=True)
class CdsOption:
    """One pricing request.

    ``maturity`` is a year fraction, ``payment_frequency`` the number of
    premium payments per year and ``recovery_rate`` the fraction of notional
    recovered on default.
    """

    maturity: float
    payment_frequency: int
    recovery_rate: float

    def __post_init__(self) -> None:
        m, f, r = self.maturity, self.payment_frequency, self.recovery_rate
        if isinstance(m, bool) or not isinstance(m, (int, float)) or not math.isfinite(m) or m <= 0:
            raise ValidationError(f"maturity must be finite and > 0, got {m!r}")
        if isinstance(f, bool) or not float(f).is_integer() or f < 1:
            raise ValidationError(f"payment_frequency must be an integer >= 1, got {f!r}")
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not 0.0 <= r <= 1.0:
            raise ValidationError(f"recovery_rate must lie in [0, 1], got {r!r}")
        object.__setattr__(self, "maturity", float(m))
        object.__setattr__(self, "payment_frequency", int(f))
        object.__setattr__(self, "recovery_rate", float(r))


@dataclass(frozen=True)
class TimeGrid:
    """Premium dates ``t_1 < ... < t_n = maturity``; ``t_0 = 0`` is implicit."""

    points: tuple[float, ...]

    def __post_init__(self) -> None:
        pts = tuple(map(float, self.points))
        if not pts:
            raise ValidationError("time grid is empty")
        prev = 0.0
        for p in pts:
            if not p > prev:
                raise ValidationError("grid points must be strictly increasing from t_0 = 0")
            prev = p
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def periods(self):
        """Yield ``(t_prev, t)`` for every period, starting from ``t_0 = 0``."""
        prev = 0.0
        for t in self.points:
            yield prev, t
            prev = t


def grid_length(maturity: float, frequency: int) -> int:
    return max(1, math.ceil(maturity * frequency - GRID_TOL))


def generate_time_points(option: CdsOption) -> TimeGrid:
    """Regular grid ``k / frequency`` closed by a point at maturity.

    When maturity is not a whole number of periods the last period is a
    short stub; a regular date within ``GRID_TOL`` of maturity is merged
    into it.
    """
    if not isinstance(option, CdsOption):
        raise ValidationError(f"expected CdsOption, got {type(option).__name__}")
    return TimeGrid(tuple(grid_points(option.maturity, option.payment_frequency)))


def grid_points(maturity: float, frequency: int) -> list[float]:
    """Raw grid for already-validated inputs (no TimeGrid checks)."""
    pts = [k / frequency for k in range(1, grid_length(maturity, frequency))]
    pts.append(maturity)
    return pts
