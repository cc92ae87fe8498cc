import math

import numpy as np
import pytest

from cdsflow.curves import TermStructure
from cdsflow.errors import DomainError, PricingError
from cdsflow.pricing import (LegValues, PricingFailure, accrual_leg, fair_spread, leg_values,
                             payoff_leg, premium_leg, price_batch, price_option)
from cdsflow.schedule import CdsOption, generate_time_points

from .oracles import fine_grid_spread_bps


def flat(r, h):
    return TermStructure.flat(r, "interest"), TermStructure.flat(h, "hazard")


def grid(m, f):
    return generate_time_points(CdsOption(m, f, 0.4))


def test_premium_examples():
    assert premium_leg(grid(1, 4), *flat(0.0, 0.0)) == 1.0
    assert premium_leg(grid(1, 1), *flat(0.0, 0.02)) == pytest.approx(math.exp(-0.02), rel=1e-15)
    assert premium_leg(grid(1, 1), *flat(0.05, 0.0)) == pytest.approx(0.951229424500714, rel=1e-14)


def test_payoff_examples():
    assert payoff_leg(grid(5, 4), *flat(0.03, 0.0), 0.4) == 0.0
    assert payoff_leg(grid(5, 4), *flat(0.03, 0.02), 1.0) == 0.0
    v = payoff_leg(grid(1, 1), *flat(0.0, 0.02), 0.4)
    assert v == pytest.approx(0.6 * (1 - math.exp(-0.02)), rel=1e-14)
    assert v == pytest.approx(0.011881, abs=5e-7)


def test_accrual_examples():
    assert accrual_leg(grid(3, 4), *flat(0.03, 0.0)) == 0.0
    v = accrual_leg(grid(1, 1), *flat(0.0, 0.02))
    assert v == pytest.approx(0.5 * (1 - math.exp(-0.02)), rel=1e-14)
    assert v == pytest.approx(0.009901, abs=5e-7)


def test_accrual_first_order_in_hazard():
    g = grid(5, 4)
    a1 = accrual_leg(g, *flat(0.03, 1e-6))
    a2 = accrual_leg(g, *flat(0.03, 2e-6))
    assert a1 / a2 == pytest.approx(0.5, rel=1e-5)


def test_fair_spread():
    assert fair_spread(LegValues(1.0, 0.0, 0.0)) == 0.0
    assert fair_spread(LegValues(1.0, 0.012, 0.0)) == pytest.approx(120.0, rel=1e-14)
    for bad in (LegValues(0.0, 0.0, 0.0), LegValues(math.inf, 1.0, 0.0),
                LegValues(math.nan, 1.0, 0.0)):
        with pytest.raises(DomainError):
            fair_spread(bad)


def test_spread_example_vs_fine_grid():
    oracle = fine_grid_spread_bps(5.0, 0.02, 0.05, 0.4)
    assert oracle == pytest.approx(120.0, rel=1e-6)
    res = price_option(CdsOption(5.0, 4, 0.4), *flat(0.05, 0.02))
    assert res.spread_bps == pytest.approx(oracle, rel=0.01)


def test_price_option_examples():
    ir, hz = flat(0.05, 0.03)
    assert price_option(CdsOption(1.0, 4, 1.0), ir, hz).spread_bps == 0.0
    r = price_option(CdsOption(5.0, 4, 0.4), *flat(0.0, 0.01))
    assert r.spread_bps == pytest.approx(60.0, rel=0.01)
    batch = price_batch([CdsOption(3.0, 2, 0.3)] * 5, ir, hz)
    assert len({b.spread_bps for b in batch}) == 1
    assert [b.option_index for b in batch] == list(range(5))


def test_pure_function():
    ir, hz = flat(0.02, 0.04)
    opt = CdsOption(7.3, 12, 0.25)
    a = price_option(opt, ir, hz)
    b = price_option(opt, ir, hz)
    assert a == b


def test_leg_invariants(workload_small):
    ir, hz, opts = workload_small
    for o in opts[:50]:
        legs = leg_values(generate_time_points(o), ir, hz, o.recovery_rate)
        assert all(math.isfinite(v) for v in legs)
        assert legs.premium_pv >= 0 and legs.accrual_pv >= 0 and legs.payoff_pv >= 0


def test_credit_triangle_grid():
    for h in (0.005, 0.01, 0.05):
        for R in (0.0, 0.4, 0.8):
            for m in (1, 5, 10):
                tri = 1e4 * h * (1 - R)
                s = price_option(CdsOption(m, 4, R), *flat(0.05, h)).spread_bps
                assert abs(s - tri) / tri < 0.02


def test_monotone_in_hazard_and_recovery(workload_small):
    ir, hz, opts = workload_small
    bumped = TermStructure(hz.times, hz.rates + 0.001, "hazard")
    for o in opts[:40]:
        base = price_option(o, ir, hz).spread_bps
        assert price_option(o, ir, bumped).spread_bps > base
        if o.recovery_rate < 0.95:
            more = CdsOption(o.maturity, o.payment_frequency, o.recovery_rate + 0.05)
            assert price_option(more, ir, hz).spread_bps < base


@pytest.mark.parametrize("h, r", [(0.005, 0.0), (0.02, 0.05), (0.05, 0.03)])
def test_frequency_refinement_stable(h, r):
    # annual -> semiannual can move the spread by ~1.2% (first-order error)
    for f in (2, 4, 6, 12):
        a = price_option(CdsOption(5.0, f, 0.4), *flat(r, h)).spread_bps
        b = price_option(CdsOption(5.0, 2 * f, 0.4), *flat(r, h)).spread_bps
        assert abs(a - b) / a < 0.01


def test_errors_carry_index():
    # D(t) overflows past t = 5 so premium and payoff become infinite
    ir = TermStructure.from_nodes([(5.0, 0.0), (5.5, -1000.0)], "interest")
    hz = TermStructure.flat(0.02, "hazard")
    with pytest.raises(PricingError) as ei:
        price_option(CdsOption(8.0, 4, 0.4), ir, hz, option_index=17)
    assert ei.value.option_index == 17
    res = price_batch([CdsOption(2.0, 4, 0.4), CdsOption(8.0, 4, 0.4)], ir, hz)
    assert res[0].ok and isinstance(res[1], PricingFailure) and res[1].option_index == 1
    with pytest.raises(PricingError):
        price_batch([CdsOption(8.0, 4, 0.4)], ir, hz, collect_errors=False)
