import json
import math

import numpy as np
import pytest

from cdsflow.curves import CurveKind, TermStructure
from cdsflow.errors import ValidationError
from cdsflow.io import (LoadError, generate_workload, load_options, load_term_structure,
                        read_results, save_options, save_term_structure, write_results)
from cdsflow.pricing import LegValues, PricingFailure, SpreadResult
from cdsflow.schedule import CdsOption


def test_load_csv_curve(tmp_path):
    p = tmp_path / "ir.csv"
    p.write_text("time,rate\n1.0,0.02\n2.0,0.04")
    ts = load_term_structure(p, "interest")
    assert ts.nodes == [(1.0, 0.02), (2.0, 0.04)] and ts.kind is CurveKind.INTEREST


def test_load_json_curve(tmp_path):
    p = tmp_path / "hz.json"
    p.write_text(json.dumps([{"time": 0.5, "rate": 0.01}, {"time": 3, "rate": 0.02}]))
    assert load_term_structure(p, "hazard").nodes == [(0.5, 0.01), (3.0, 0.02)]


@pytest.mark.parametrize("body, where", [
    ("time,rate\n1.0,0.02\n0.5,0.04\n", "line 3"),
    ("time,rate\n1.0,0.02\n2.0,abc\n", "line 3"),
    ("time,rate\n1.0,0.02,9\n", "line 2"),
    ("t,r\n1.0,0.02\n", "line 1"),
    ("time,rate\n1.0,-0.02\n", "line 2"),
    ("time,rate\n1.0,nan\n", "line 2"),
])
def test_curve_errors_are_located(tmp_path, body, where):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(LoadError) as ei:
        load_term_structure(p, "hazard")
    assert ei.value.where == where
    assert where in str(ei.value)


def test_json_curve_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('[{"time": 1, "rate": 0.1}, {"time": 0.5, "rate": 0.1}]')
    with pytest.raises(LoadError, match="record 1"):
        load_term_structure(p, "interest")
    p.write_text('[{"time": 1,\n "rate": }]')
    with pytest.raises(LoadError, match="line 2"):
        load_term_structure(p, "interest")


@pytest.mark.parametrize("ext", ["csv", "json"])
def test_curve_round_trip_1024(tmp_path, ext):
    ir, hz, _ = generate_workload(1, 1024, seed=3)
    for ts in (ir, hz):
        p = tmp_path / f"c.{ext}"
        save_term_structure(ts, p)
        once = load_term_structure(p, ts.kind)
        save_term_structure(once, p)
        twice = load_term_structure(p, ts.kind)
        assert once.same_values(ts) and twice.same_values(ts)


def test_load_options_csv(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text("maturity,frequency,recovery\n1,4,0.4\n5.5,2,0\n10,12,0.9\n")
    assert load_options(p) == [CdsOption(1, 4, 0.4), CdsOption(5.5, 2, 0.0), CdsOption(10, 12, 0.9)]


def test_invalid_option_rejected(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text("maturity,frequency,recovery\n1,4,0.4\n1,4,1.5\n")
    with pytest.raises(LoadError, match="line 3"):
        load_options(p)
    p.write_text("# cdsflow-options v1 count=3\nmaturity,frequency,recovery\n1,4,0.4\n")
    with pytest.raises(LoadError, match="declared count 3"):
        load_options(p)
    q = tmp_path / "o.json"
    q.write_text(json.dumps({"format_version": 1, "count": 1,
                             "options": [{"maturity": 1, "frequency": 0, "recovery": 0.1}]}))
    with pytest.raises(LoadError, match="record 0"):
        load_options(q)


@pytest.mark.parametrize("ext", ["csv", "json"])
def test_large_option_file_preserves_order(tmp_path, ext):
    _, _, opts = generate_workload(100_000, 2, seed=12)
    p = tmp_path / f"o.{ext}"
    save_options(opts, p)
    assert load_options(p) == opts


def _results():
    return [
        SpreadResult(0, 123.456789012345678, LegValues(4.1, 0.05, 0.01)),
        PricingFailure(1, "risky annuity must be finite"),
        SpreadResult(2, 1 / 3, LegValues(1 / 7, 2 / 9, 1e-300)),
    ]


def test_write_results_csv(tmp_path):
    p = tmp_path / "r.csv"
    write_results([], p)
    assert p.read_text() == "index,spread_bps,premium_pv,payoff_pv,accrual_pv,error\n"
    write_results(_results()[:1], p)
    row = p.read_text().splitlines()[1].split(",")
    assert row[0] == "0"
    assert row[1] == "123.45678901234568"  # 17 significant digits
    assert len(row[1].replace(".", "")) == 17


@pytest.mark.parametrize("ext", ["csv", "json"])
def test_results_round_trip(tmp_path, ext):
    p = tmp_path / f"r.{ext}"
    res = _results()
    write_results(res, p)
    back = read_results(p)
    assert [b["index"] for b in back] == [0, 1, 2]
    for r, b in zip(res, back):
        if r.ok:
            assert b["spread_bps"] == r.spread_bps
            assert (b["premium_pv"], b["payoff_pv"], b["accrual_pv"]) == tuple(r.legs)
            assert b["error"] == ""
        else:
            assert math.isnan(b["spread_bps"]) and b["error"] == r.message


def test_unknown_format(tmp_path):
    with pytest.raises(ValidationError):
        write_results([], tmp_path / "r.txt")


def test_workload_deterministic_and_valid():
    a = generate_workload(500, 1024, seed=4)
    b = generate_workload(500, 1024, seed=4)
    assert a[0].same_values(b[0]) and a[1].same_values(b[1]) and a[2] == b[2]
    assert len(a[0]) == len(a[1]) == 1024
    c = generate_workload(500, 1024, seed=5)
    assert c[2] != a[2]


def test_workload_ranges():
    ir, hz, opts = generate_workload(10_000, 10_000, seed=21)
    assert hz.rates.min() >= 0.001 and hz.rates.max() <= 0.08
    m = np.array([o.maturity for o in opts])
    r = np.array([o.recovery_rate for o in opts])
    assert m.min() >= 0.5 and m.max() <= 10.0
    assert r.min() >= 0.0 and r.max() <= 0.9
    assert {o.payment_frequency for o in opts} <= {1, 2, 4, 12}
