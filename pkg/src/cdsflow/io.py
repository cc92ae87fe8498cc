"""File formats and synthetic workloads.

Term structures
    CSV with header ``time,rate``; JSON array of ``{"time": .., "rate": ..}``.
Option batches
    CSV with header ``maturity,frequency,recovery``, optionally preceded by
    a metadata line ``# cdsflow-options v1 count=N``; JSON either a bare
    array of ``{"maturity", "frequency", "recovery"}`` objects or
    ``{"format_version": 1, "count": N, "options": [...]}``.
Results
    Columns ``index,spread_bps,premium_pv,payoff_pv,accrual_pv,error``;
    ``error`` is empty for priced options.

Floats are written with 17 significant digits so every value survives a
round trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path
from typing import Any, Sequence, TextIO

import numpy as np

from .curves import CurveKind, TermStructure
from .errors import ValidationError
from .pricing import PricingFailure, SpreadResult
from .schedule import CdsOption

FORMAT_VERSION = 1
RESULT_COLUMNS = ("index", "spread_bps", "premium_pv", "payoff_pv", "accrual_pv", "error")
_META_RE = re.compile(r"#\s*cdsflow-options\s+v(\d+)\s+count=(\d+)\s*$")


class LoadError(ValidationError):
    def __init__(self, path: str | Path, where: str, message: str) -> None:
        super().__init__(f"{path}: {where}: {message}")
        self.path = str(path)
        self.where = where


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _format_of(path: Path, fmt: str | None) -> str:
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in ("csv", "json"):
        raise ValidationError(f"{path}: unknown format {fmt!r} (expected csv or json)")
    return fmt


def _parse_float(path, where, text: str, name: str) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise LoadError(path, where, f"{name} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise LoadError(path, where, f"{name} must be finite, got {text!r}")
    return v


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise LoadError(path, f"line {exc.lineno}", f"invalid JSON: {exc.msg}") from None


def _csv_rows(path: Path, header: tuple[str, ...]):
    """Yield ``(line_number, fields)`` for data rows, checking the header."""
    with path.open(newline="") as fh:
        lines = [(n, ln) for n, ln in enumerate(fh, start=1)]
    meta = None
    body = [(n, ln) for n, ln in lines if ln.strip()]
    if body and body[0][1].lstrip().startswith("#"):
        meta = body.pop(0)
    if not body:
        raise LoadError(path, "line 1", f"missing header {','.join(header)!r}")
    n, head = body[0]
    got = tuple(h.strip().lower() for h in next(csv.reader([head])))
    if got != header:
        raise LoadError(path, f"line {n}", f"expected header {','.join(header)!r}, got {head.strip()!r}")
    rows = []
    for n, ln in body[1:]:
        fields = next(csv.reader([ln]))
        if len(fields) != len(header):
            raise LoadError(path, f"line {n}", f"expected {len(header)} fields, got {len(fields)}")
        rows.append((n, [f.strip() for f in fields]))
    return meta, rows


def load_term_structure(path: str | Path, kind: CurveKind | str, fmt: str | None = None) -> TermStructure:
    path = Path(path)
    kind = CurveKind.parse(kind)
    nodes: list[tuple[float, float]] = []
    where_of: list[str] = []
    if _format_of(path, fmt) == "csv":
        _, rows = _csv_rows(path, ("time", "rate"))
        for n, (t, r) in rows:
            where = f"line {n}"
            nodes.append((_parse_float(path, where, t, "time"), _parse_float(path, where, r, "rate")))
            where_of.append(where)
    else:
        data = _read_json(path)
        if not isinstance(data, list):
            raise LoadError(path, "top level", "expected an array of {time, rate} objects")
        for k, rec in enumerate(data):
            where = f"record {k}"
            if not isinstance(rec, dict) or set(rec) != {"time", "rate"}:
                raise LoadError(path, where, "expected an object with keys time, rate")
            nodes.append((_parse_float(path, where, rec["time"], "time"),
                          _parse_float(path, where, rec["rate"], "rate")))
            where_of.append(where)
    if not nodes:
        raise LoadError(path, "body", "no nodes")
    prev = None
    for (t, r), where in zip(nodes, where_of):
        if t < 0:
            raise LoadError(path, where, f"time must be >= 0, got {t!r}")
        if prev is not None and t <= prev:
            raise LoadError(path, where, f"times must be strictly increasing ({t!r} after {prev!r})")
        if kind is CurveKind.HAZARD and r < 0:
            raise LoadError(path, where, f"hazard rate must be >= 0, got {r!r}")
        prev = t
    return TermStructure.from_nodes(nodes, kind)


def save_term_structure(ts: TermStructure, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    if _format_of(path, fmt) == "csv":
        lines = ["time,rate"] + [f"{fmt_float(t)},{fmt_float(r)}" for t, r in ts.nodes]
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_text(json.dumps([{"time": t, "rate": r} for t, r in ts.nodes], indent=1) + "\n")


def _make_option(path, where, maturity, frequency, recovery) -> CdsOption:
    m = _parse_float(path, where, maturity, "maturity")
    f = _parse_float(path, where, frequency, "frequency")
    r = _parse_float(path, where, recovery, "recovery")
    try:
        return CdsOption(m, f, r)
    except ValidationError as exc:
        raise LoadError(path, where, str(exc)) from None


def load_options(path: str | Path, fmt: str | None = None) -> list[CdsOption]:
    path = Path(path)
    declared = None
    opts: list[CdsOption] = []
    if _format_of(path, fmt) == "csv":
        meta, rows = _csv_rows(path, ("maturity", "frequency", "recovery"))
        if meta is not None:
            m = _META_RE.match(meta[1].strip())
            if m is None:
                raise LoadError(path, f"line {meta[0]}", f"unrecognised metadata {meta[1].strip()!r}")
            if int(m.group(1)) != FORMAT_VERSION:
                raise LoadError(path, f"line {meta[0]}", f"unsupported format version {m.group(1)}")
            declared = int(m.group(2))
        for n, (mat, freq, rec) in rows:
            opts.append(_make_option(path, f"line {n}", mat, freq, rec))
    else:
        data = _read_json(path)
        if isinstance(data, dict):
            if data.get("format_version") != FORMAT_VERSION:
                raise LoadError(path, "header", f"unsupported format_version {data.get('format_version')!r}")
            declared = data.get("count")
            data = data.get("options")
        if not isinstance(data, list):
            raise LoadError(path, "top level", "expected an array of option objects")
        for k, rec in enumerate(data):
            where = f"record {k}"
            if not isinstance(rec, dict) or set(rec) != {"maturity", "frequency", "recovery"}:
                raise LoadError(path, where, "expected an object with keys maturity, frequency, recovery")
            opts.append(_make_option(path, where, rec["maturity"], rec["frequency"], rec["recovery"]))
    if declared is not None and declared != len(opts):
        raise LoadError(path, "header", f"declared count {declared} but found {len(opts)} options")
    return opts


def save_options(options: Sequence[CdsOption], path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    if _format_of(path, fmt) == "csv":
        lines = [f"# cdsflow-options v{FORMAT_VERSION} count={len(options)}",
                 "maturity,frequency,recovery"]
        lines += [f"{fmt_float(o.maturity)},{o.payment_frequency},{fmt_float(o.recovery_rate)}"
                  for o in options]
        path.write_text("\n".join(lines) + "\n")
    else:
        doc = {
            "format_version": FORMAT_VERSION,
            "count": len(options),
            "options": [{"maturity": o.maturity, "frequency": o.payment_frequency,
                         "recovery": o.recovery_rate} for o in options],
        }
        path.write_text(json.dumps(doc, indent=1) + "\n")


def _result_row(res: SpreadResult | PricingFailure) -> dict[str, Any]:
    if isinstance(res, PricingFailure):
        nan = math.nan
        return dict(index=res.option_index, spread_bps=nan, premium_pv=nan,
                    payoff_pv=nan, accrual_pv=nan, error=res.message)
    legs = res.legs
    return dict(index=res.option_index, spread_bps=res.spread_bps, premium_pv=legs.premium_pv,
                payoff_pv=legs.payoff_pv, accrual_pv=legs.accrual_pv, error="")


def write_results(results: Sequence[SpreadResult | PricingFailure], path: str | Path | TextIO,
                  fmt: str | None = None) -> None:
    """Write results as CSV or JSON; ``path`` may also be an open text stream."""
    if hasattr(path, "write"):
        fmt = fmt or "csv"
        if fmt not in ("csv", "json"):
            raise ValidationError(f"unknown format {fmt!r} (expected csv or json)")
        _dump_results(results, path, fmt)
        return
    path = Path(path)
    fmt = _format_of(path, fmt)
    with path.open("w", newline="") as fh:
        _dump_results(results, fh, fmt)


def _dump_results(results, fh: TextIO, fmt: str) -> None:
    rows = [_result_row(r) for r in results]
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in rows:
            w.writerow([row["index"]] + [fmt_float(row[k]) for k in RESULT_COLUMNS[1:5]]
                       + [row["error"]])
        return
    for row in rows:
        for k in RESULT_COLUMNS[1:5]:
            if math.isnan(row[k]):
                row[k] = None
    fh.write(json.dumps(rows, indent=1) + "\n")


def read_results(path: str | Path, fmt: str | None = None) -> list[dict[str, Any]]:
    """Parse a file written by :func:`write_results` back into row dicts."""
    path = Path(path)
    if _format_of(path, fmt) == "csv":
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        out = []
        for r in rows:
            row = {"index": int(r["index"]), "error": r["error"]}
            row.update({k: float(r[k]) for k in RESULT_COLUMNS[1:5]})
            out.append(row)
        return out
    rows = json.loads(path.read_text())
    for row in rows:
        for k in RESULT_COLUMNS[1:5]:
            if row[k] is None:
                row[k] = math.nan
    return rows


HAZARD_RANGE = (0.001, 0.08)
MATURITY_RANGE = (0.5, 10.0)
RECOVERY_RANGE = (0.0, 0.9)
FREQUENCIES = (1, 2, 4, 12)


def generate_workload(
    num_options: int, num_rate_nodes: int = 1024, seed: int = 0
) -> tuple[TermStructure, TermStructure, list[CdsOption]]:
    """Deterministic synthetic ``(interest, hazard, options)`` for benchmarks.

    Node times cover the maturity range; hazard values random-walk in log
    space inside ``HAZARD_RANGE``.
    """
    if num_options < 0 or num_rate_nodes < 1:
        raise ValidationError("num_options must be >= 0 and num_rate_nodes >= 1")
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.5, 1.5, num_rate_nodes)
    times = np.cumsum(gaps) / gaps.sum() * MATURITY_RANGE[1]

    drift = np.cumsum(rng.normal(0.0, 0.0005, num_rate_nodes))
    rates = np.clip(0.005 + 0.035 * (1.0 - np.exp(-times / 4.0)) + drift, -0.005, 0.08)

    level = rng.uniform(0.005, 0.04)
    walk = np.cumsum(rng.normal(0.0, 0.05, num_rate_nodes))
    hazard = np.clip(level * np.exp(walk), *HAZARD_RANGE)

    mats = rng.uniform(*MATURITY_RANGE, num_options)
    freqs = rng.choice(FREQUENCIES, num_options)
    recs = rng.uniform(*RECOVERY_RANGE, num_options)
    options = [CdsOption(float(m), int(f), float(r)) for m, f, r in zip(mats, freqs, recs)]
    return (
        TermStructure(times, rates, CurveKind.INTEREST),
        TermStructure(times.copy(), hazard, CurveKind.HAZARD),
        options,
    )
