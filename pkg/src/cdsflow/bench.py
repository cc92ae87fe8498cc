"""Throughput benchmark: options per second for the oracle and pipeline variants."""

from __future__ import annotations

import itertools
import os
import statistics
import time
from dataclasses import asdict, dataclass, replace
from typing import Callable, Mapping, Sequence

from .curves import TermStructure
from .pipeline import EngineConfig
from .pricing import price_batch
from .scaler import run_engines
from .schedule import CdsOption

DEFAULT_REPEATS = 3
SWEEPABLE = ("engines", "replication", "lanes", "frame_size", "stream_capacity")


@dataclass
class BenchRow:
    variant: str
    options_per_second: list[float]
    repeats: int
    mean: float
    stddev: float
    speedup_vs_oracle: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def parse_sweep(specs: Sequence[str]) -> dict[str, list[int]]:
    """``["engines=1,2,5", "replication=1,6"]`` -> ``{"engines": [1, 2, 5], ...}``."""
    out: dict[str, list[int]] = {}
    for spec in specs:
        key, sep, values = spec.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in SWEEPABLE:
            raise ValueError(f"bad sweep {spec!r}; expected one of {', '.join(SWEEPABLE)}=v1,v2,...")
        try:
            out[key] = [int(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ValueError(f"bad sweep values in {spec!r}") from None
        if not out[key]:
            raise ValueError(f"empty sweep {spec!r}")
    return out


def variants(sweep: Mapping[str, Sequence[int]], base: EngineConfig) -> list[tuple[str, EngineConfig]]:
    keys = list(sweep)
    out = []
    for combo in itertools.product(*(sweep[k] for k in keys)):
        cfg = replace(base, **dict(zip(keys, combo)))
        label = "pipeline[" + ",".join(f"{k}={v}" for k, v in zip(keys, combo)) + "]"
        out.append((label, cfg))
    if not out:
        out.append(("pipeline[]", base))
    return out


def time_throughput(fn: Callable[[], object], n_options: int, repeats: int) -> list[float]:
    rates = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        rates.append(n_options / (time.perf_counter() - t0))
    return rates


def _row(label: str, rates: list[float]) -> BenchRow:
    sd = statistics.stdev(rates) if len(rates) > 1 else 0.0
    return BenchRow(label, rates, len(rates), statistics.fmean(rates), sd)


def run_bench(
    options: Sequence[CdsOption],
    interest: TermStructure,
    hazard: TermStructure,
    sweep: Mapping[str, Sequence[int]] | None = None,
    repeats: int = DEFAULT_REPEATS,
    base: EngineConfig | None = None,
    include_oracle: bool = True,
) -> list[BenchRow]:
    """Time every variant ``repeats`` times over the same batch.

    A short warm-up call compiles the kernels before anything is timed.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    base = base or EngineConfig()
    n = len(options)
    run_engines(options[:2], interest, hazard, base)

    rows: list[BenchRow] = []
    oracle = None
    if include_oracle:
        oracle = _row("oracle", time_throughput(
            lambda: price_batch(options, interest, hazard), n, repeats))
        oracle.speedup_vs_oracle = 1.0
        rows.append(oracle)
    for label, cfg in variants(sweep or {}, base):
        row = _row(label, time_throughput(
            lambda cfg=cfg: run_engines(options, interest, hazard, cfg), n, repeats))
        if oracle is not None:
            row.speedup_vs_oracle = row.mean / oracle.mean
        rows.append(row)
    return rows


def format_table(rows: Sequence[BenchRow], n_options: int) -> str:
    width = max(len(r.variant) for r in rows)
    lines = [
        f"{n_options} options, {rows[0].repeats} repeats, {os.cpu_count()} hardware threads",
        "absolute options/second are hardware-dependent; compare the speedup column",
        f"{'variant':<{width}}  {'options/s (mean)':>16}  {'stddev':>10}  {'speedup':>8}",
    ]
    for r in rows:
        sp = "-" if r.speedup_vs_oracle is None else f"{r.speedup_vs_oracle:.2f}x"
        lines.append(f"{r.variant:<{width}}  {r.mean:>16.1f}  {r.stddev:>10.1f}  {sp:>8}")
    return "\n".join(lines)
