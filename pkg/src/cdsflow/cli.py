"""Command-line entry point: ``cdsflow {price,bench,gen}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as benchmod
from .curves import CurveKind
from .errors import CdsError
from .io import (generate_workload, load_options, load_term_structure, save_options,
                 save_term_structure, write_results)
from .pipeline import EngineConfig
from .pricing import PricingFailure, price_batch
from .scaler import run_engines


def _config(args: argparse.Namespace) -> EngineConfig:
    return EngineConfig(
        lanes=args.lanes,
        replication=args.replication,
        engines=args.engines,
        frame_size=args.frame_size,
        stream_capacity=args.stream_capacity,
    )


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    d = EngineConfig()
    p.add_argument("--engines", type=int, default=d.engines, help="independent pipelines (N)")
    p.add_argument("--replication", type=int, default=d.replication,
                   help="survival workers per pipeline (V)")
    p.add_argument("--lanes", type=int, default=d.lanes, help="partial sums in the hazard reduction")
    p.add_argument("--frame-size", type=int, default=d.frame_size)
    p.add_argument("--stream-capacity", type=int, default=d.stream_capacity)


def cmd_price(args: argparse.Namespace) -> int:
    options = load_options(args.options)
    interest = load_term_structure(args.interest, CurveKind.INTEREST)
    hazard = load_term_structure(args.hazard, CurveKind.HAZARD)
    if args.engine == "oracle":
        results = price_batch(options, interest, hazard)
    else:
        results = run_engines(options, interest, hazard, _config(args))
    failed = [r for r in results if isinstance(r, PricingFailure)]
    for f in failed:
        print(f"warning: option {f.option_index}: {f.message}", file=sys.stderr)
    if args.out:
        write_results(results, args.out, args.format)
    else:
        write_results(results, sys.stdout, args.format)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    interest, hazard, options = generate_workload(args.num_options, args.rates, args.seed)
    sweep = benchmod.parse_sweep(args.sweep or [])
    rows = benchmod.run_bench(options, interest, hazard, sweep, args.repeats, _config(args))
    print(benchmod.format_table(rows, len(options)))
    doc = [r.to_json() for r in rows]
    if args.json:
        Path(args.json).write_text(json.dumps(doc, indent=1) + "\n")
    else:
        print(json.dumps(doc))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    interest, hazard, options = generate_workload(args.num_options, args.rates, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = args.format
    save_term_structure(interest, out / f"interest.{ext}")
    save_term_structure(hazard, out / f"hazard.{ext}")
    save_options(options, out / f"options.{ext}")
    print(f"wrote {len(options)} options and {args.rates}-node curves to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdsflow", description="CDS fair-spread pricing engine")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price an option batch")
    p.add_argument("--options", required=True)
    p.add_argument("--interest", required=True)
    p.add_argument("--hazard", required=True)
    p.add_argument("--engine", choices=("oracle", "pipeline"), default="pipeline")
    _add_engine_flags(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(func=cmd_price)

    b = sub.add_parser("bench", help="measure options/second")
    b.add_argument("--num-options", type=int, default=10_000)
    b.add_argument("--rates", type=int, default=1024, help="nodes per curve")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--sweep", action="append", metavar="KEY=V1,V2",
                   help=f"vary one of {', '.join(benchmod.SWEEPABLE)}; repeatable")
    b.add_argument("--repeats", type=int, default=benchmod.DEFAULT_REPEATS)
    b.add_argument("--json", help="write the JSON report here instead of stdout")
    _add_engine_flags(b)
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="write a synthetic workload")
    g.add_argument("--num-options", type=int, default=10_000)
    g.add_argument("--rates", type=int, default=1024, help="nodes per curve")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.set_defaults(func=cmd_gen)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CdsError, ValueError, OSError) as exc:
        print(f"cdsflow {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
