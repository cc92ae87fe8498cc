"""Multi-engine decomposition: contiguous chunks, one pipeline each."""

from __future__ import annotations

import math
import threading
from typing import Callable, Sequence

from .curves import TermStructure
from .errors import ValidationError
from .kernels import CurveTables
from .pipeline import EngineConfig, PipelineStats, run_pipeline
from .pricing import PricingFailure, SpreadResult
from .schedule import CdsOption


def partition(n: int, engines: int) -> list[range]:
    """Contiguous chunks of ``ceil(n / engines)``; trailing chunks may be empty."""
    if engines < 1:
        raise ValidationError(f"engines must be >= 1, got {engines}")
    size = math.ceil(n / engines) if n else 0
    return [range(min(i * size, n), min((i + 1) * size, n)) for i in range(engines)]


def run_engines(
    options: Sequence[CdsOption],
    interest: TermStructure,
    hazard: TermStructure,
    config: EngineConfig | None = None,
    *,
    stats: PipelineStats | None = None,
    stage_hook: Callable[[str], None] | None = None,
) -> list[SpreadResult | PricingFailure]:
    """Run ``config.engines`` independent pipelines and merge in input order.

    The curve tables are built once; every engine reads the same arrays.
    """
    config = config or EngineConfig()
    options = list(options)
    if not options:
        raise ValidationError("option batch is empty")
    tables = CurveTables.build(interest, hazard)
    chunks = [c for c in partition(len(options), config.engines) if len(c)]
    if len(chunks) == 1:
        return run_pipeline(options, interest, hazard, config, tables=tables,
                            stats=stats, stage_hook=stage_hook)

    out: list[list | None] = [None] * len(chunks)
    errors: list[BaseException] = []

    def engine(e: int, chunk: range) -> None:
        try:
            out[e] = run_pipeline(
                options[chunk.start:chunk.stop], interest, hazard, config,
                start_index=chunk.start, tables=tables, stats=stats,
                stage_hook=stage_hook, engine=e,
            )
        except BaseException as exc:  # noqa: BLE001 - re-raised below
            errors.append(exc)

    threads = [threading.Thread(target=engine, args=(e, c), name=f"cds-engine-{e}", daemon=True)
               for e, c in enumerate(chunks)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]
    merged: list[SpreadResult | PricingFailure] = []
    for part in out:
        merged.extend(part)
    return merged
