"""Sequential reference pricer.

This is the oracle every other engine is checked against: one option at a
time, one time point at a time, plain left-fold sums and the naive hazard
integral. For grid points ``t_1..t_n`` (``t_0 = 0``), period midpoints
``m_i`` and ``dp_i = S(t_{i-1}) - S(t_i)``:

    premium = sum  dt_i * D(t_i) * S(t_i)
    payoff  = (1 - R) * sum  D(m_i) * dp_i
    accrual = sum  (dt_i / 2) * D(m_i) * dp_i
    spread  = 10000 * payoff / (premium + accrual)      [bps]
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .curves import TermStructure, discount_factor, survival_probability
from .errors import CdsError, DomainError, PricingError
from .schedule import CdsOption, TimeGrid, generate_time_points

BPS = 10_000.0


class LegValues(NamedTuple):
    premium_pv: float
    payoff_pv: float
    accrual_pv: float


@dataclass(frozen=True)
class SpreadResult:
    option_index: int
    spread_bps: float
    legs: LegValues

    ok = True


@dataclass(frozen=True)
class PricingFailure:
    """Placeholder emitted in a result batch for an option that failed."""

    option_index: int
    message: str

    ok = False

    def raise_(self) -> None:
        raise PricingError(self.option_index, self.message)


class _Sums(NamedTuple):
    premium: float
    default_weighted: float
    accrual: float


def _leg_sums(grid: TimeGrid, interest: TermStructure, hazard: TermStructure) -> _Sums:
    premium = 0.0
    dflt = 0.0
    accrual = 0.0
    s_prev = 1.0
    for t_prev, t in grid.periods():
        dt = t - t_prev
        mid = (t_prev + t) / 2.0
        s = survival_probability(hazard, t)
        d = discount_factor(interest, t)
        d_mid = discount_factor(interest, mid)
        dp = s_prev - s
        premium += dt * d * s
        dflt += d_mid * dp
        accrual += (dt / 2.0) * d_mid * dp
        s_prev = s
    return _Sums(premium, dflt, accrual)


def premium_leg(grid: TimeGrid, interest: TermStructure, hazard: TermStructure) -> float:
    """PV of one unit of annual spread paid at each grid date while alive."""
    return _leg_sums(grid, interest, hazard).premium


def payoff_leg(
    grid: TimeGrid, interest: TermStructure, hazard: TermStructure, recovery_rate: float
) -> float:
    return (1.0 - recovery_rate) * _leg_sums(grid, interest, hazard).default_weighted


def accrual_leg(grid: TimeGrid, interest: TermStructure, hazard: TermStructure) -> float:
    return _leg_sums(grid, interest, hazard).accrual


def leg_values(
    grid: TimeGrid, interest: TermStructure, hazard: TermStructure, recovery_rate: float
) -> LegValues:
    sums = _leg_sums(grid, interest, hazard)
    return LegValues(sums.premium, (1.0 - recovery_rate) * sums.default_weighted, sums.accrual)


def fair_spread(legs: LegValues) -> float:
    """Spread in basis points that equates protection and premium PVs."""
    denom = legs.premium_pv + legs.accrual_pv
    if not denom > 0.0 or not math.isfinite(denom):
        raise DomainError(f"risky annuity must be finite and > 0, got {denom!r}")
    spread = BPS * legs.payoff_pv / denom
    if not math.isfinite(spread):
        raise DomainError(f"spread is not finite ({spread!r})")
    return spread


def price_option(
    option: CdsOption,
    interest: TermStructure,
    hazard: TermStructure,
    option_index: int = 0,
) -> SpreadResult:
    try:
        grid = generate_time_points(option)
        legs = leg_values(grid, interest, hazard, option.recovery_rate)
        return SpreadResult(option_index, fair_spread(legs), legs)
    except CdsError as exc:
        raise PricingError(option_index, str(exc)) from exc


def price_batch(
    options: Sequence[CdsOption] | Iterable[CdsOption],
    interest: TermStructure,
    hazard: TermStructure,
    *,
    start_index: int = 0,
    collect_errors: bool = True,
) -> list[SpreadResult | PricingFailure]:
    """Price options one after another.

    Failures become :class:`PricingFailure` entries when ``collect_errors``
    is set (the pipeline's policy); otherwise the first one is raised.
    """
    out: list[SpreadResult | PricingFailure] = []
    for i, opt in enumerate(options, start=start_index):
        try:
            out.append(price_option(opt, interest, hazard, i))
        except PricingError as exc:
            if not collect_errors:
                raise
            out.append(PricingFailure(i, exc.message))
    return out
