"""Concurrent staged-dataflow pricing engine.

Stage graph (one thread per stage, bounded FIFO streams between them)::

    ingest -> timegen -> scatter -> worker[0..V-1] -> default_probability
           -> payment -> payoff -> accrual -> accumulator -> combiner -> emitter

``ingest``/``combiner``/``emitter`` streams carry per-option records,
everything from ``timegen`` to ``accumulator`` carries per-time-point
records. Records travel in frames of ``frame_size`` to keep queue overhead
off the hot path; frames pack consecutive options back to back so the
graph runs continuously over the whole batch and every stage starts and
stops exactly once.

Shutdown: each stream carries exactly one ``END`` after its last frame.
``scatter`` copies ``END`` to every worker and ``default_probability``
collects all ``V`` of them before forwarding one. The graph is acyclic and
every stage drains its input until ``END``, so bounded streams cannot
deadlock. If a stage raises, the shared abort flag is set, every blocked
``put``/``get`` gives up, and the run fails with :class:`StageFailure`
naming the stage.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .curves import TermStructure
from .errors import CdsError, DomainError, StageFailure, ValidationError
from .kernels import CurveTables, fold_per_option, survival_discount_frame
from .pricing import LegValues, PricingFailure, SpreadResult, fair_spread
from .reduce import DEFAULT_LANES
from .schedule import CdsOption, grid_points

_POLL = 0.05


@dataclass(frozen=True)
class EngineConfig:
    lanes: int = DEFAULT_LANES
    replication: int = 6
    stream_capacity: int = 64
    engines: int = 1
    frame_size: int = 32

    def __post_init__(self) -> None:
        for name in ("lanes", "replication", "stream_capacity", "engines", "frame_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        if self.stream_capacity < 2:
            raise ValidationError("stream_capacity must be >= 2")


class _End:
    def __repr__(self) -> str:
        return "END"


END = _End()


class _Aborted(Exception):
    pass


@dataclass
class StageCounters:
    starts: int = 0
    stops: int = 0
    frames_in: int = 0
    frames_out: int = 0
    items_in: int = 0
    items_out: int = 0
    blocked_s: float = 0.0


class PipelineStats:
    """Per-stage instrumentation, keyed by ``(engine, stage)``.

    Pass an instance to :func:`run_pipeline` to switch counting on.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.counters: dict[tuple[int, str], StageCounters] = defaultdict(StageCounters)
        self.runs = 0
        self.curve_tables: list[int] = []

    def stage(self, engine: int, name: str) -> StageCounters:
        with self._lock:
            return self.counters[(engine, name)]

    def by_stage(self, engine: int = 0) -> dict[str, StageCounters]:
        return {s: c for (e, s), c in self.counters.items() if e == engine}

    def _note_run(self, tables: CurveTables) -> None:
        with self._lock:
            self.runs += 1
            self.curve_tables.append(id(tables))


class _Stream:
    """Bounded single-producer single-consumer FIFO.

    Items go through a ``SimpleQueue``; capacity is enforced by comparing
    the producer's and consumer's counters, and a full producer parks on a
    lock the consumer releases. Blocking calls poll the run's abort flag.
    """

    __slots__ = ("name", "capacity", "_q", "_abort", "_space", "_sent", "_recvd", "_prod_waiting")

    def __init__(self, name: str, capacity: int, abort: threading.Event) -> None:
        self.name = name
        self.capacity = capacity
        self._q: queue.SimpleQueue = queue.SimpleQueue()
        self._abort = abort
        self._space = threading.Lock()
        self._space.acquire()
        self._sent = 0
        self._recvd = 0
        self._prod_waiting = False

    def put(self, item, counters: StageCounters | None = None) -> None:
        if self._sent - self._recvd >= self.capacity:
            t0 = time.perf_counter()
            while self._sent - self._recvd >= self.capacity:
                self._prod_waiting = True
                # re-check after raising the flag so a wake-up cannot be lost
                if self._sent - self._recvd < self.capacity:
                    break
                self._space.acquire(timeout=_POLL)
                if self._abort.is_set():
                    raise _Aborted
            self._prod_waiting = False
            if counters is not None:
                counters.blocked_s += time.perf_counter() - t0
        self._sent += 1
        self._q.put(item)

    def get(self, counters: StageCounters | None = None):
        try:
            item = self._q.get_nowait()
        except queue.Empty:
            t0 = time.perf_counter()
            while True:
                try:
                    item = self._q.get(timeout=_POLL)
                    break
                except queue.Empty:
                    if self._abort.is_set():
                        raise _Aborted from None
            if counters is not None:
                counters.blocked_s += time.perf_counter() - t0
        self._recvd += 1
        if self._prod_waiting:
            try:
                self._space.release()
            except RuntimeError:
                pass  # already released
        return item


class _OptionBlock:
    __slots__ = ("start", "options")

    def __init__(self, start: int, options: Sequence[CdsOption]) -> None:
        self.start = start
        self.options = options

    def __len__(self) -> int:
        return len(self.options)


class PointFrame:
    """A run of time points, possibly spanning several options.

    ``metas`` lists ``(index, recovery, error)`` for each option whose last
    point is in this frame, plus failed options (which have no points), in
    batch order.
    """

    __slots__ = ("seq", "opt", "t", "tprev", "last", "metas",
                 "s", "d", "dm", "dp", "prem", "dflt", "accr")

    def __init__(self, seq, opt, t, tprev, last, metas) -> None:
        self.seq = seq
        self.opt = opt
        self.t = t
        self.tprev = tprev
        self.last = last
        self.metas = metas

    def __len__(self) -> int:
        return self.t.shape[0]


class _Totals:
    __slots__ = ("records",)

    def __init__(self, records: list) -> None:
        self.records = records

    def __len__(self) -> int:
        return len(self.records)


class _Graph:
    """Wiring and thread management for one pipeline run."""

    def __init__(self, options, tables, config, start_index, engine, stats, stage_hook):
        self.options = options
        self.tables = tables
        self.cfg = config
        self.start_index = start_index
        self.engine = engine
        self.stats = stats
        self.hook = stage_hook
        self.abort = threading.Event()
        self.failures: list[tuple[str, BaseException]] = []
        self.results: list = []
        self._threads: list[threading.Thread] = []

    def stream(self, name: str) -> _Stream:
        return _Stream(name, self.cfg.stream_capacity, self.abort)

    def counters(self, name: str) -> StageCounters | None:
        return self.stats.stage(self.engine, name) if self.stats is not None else None

    def add(self, name: str, body: Callable[[StageCounters | None], None]) -> None:
        c = self.counters(name)

        def run() -> None:
            if c is not None:
                c.starts += 1
            try:
                body(c)
            except _Aborted:
                pass
            except BaseException as exc:  # noqa: BLE001 - reported via StageFailure
                self.failures.append((name, exc))
                self.abort.set()
            finally:
                if c is not None:
                    c.stops += 1

        th = threading.Thread(target=run, name=f"cds-e{self.engine}-{name}", daemon=True)
        self._threads.append(th)

    def tick(self, name: str) -> None:
        if self.hook is not None:
            self.hook(name)

    def run(self) -> list:
        for th in self._threads:
            th.start()
        for th in self._threads:
            th.join()
        if self.failures:
            stage, exc = self.failures[0]
            raise StageFailure(stage, exc) from exc
        return self.results


def _count_in(c: StageCounters | None, item) -> None:
    if c is not None:
        c.frames_in += 1
        c.items_in += len(item)


def _count_out(c: StageCounters | None, item) -> None:
    if c is not None:
        c.frames_out += 1
        c.items_out += len(item)


def _map_stage(g: _Graph, name: str, src: _Stream, dst: _Stream, fn) -> None:
    """One-in one-out stage applying ``fn`` to every frame."""

    def body(c):
        while True:
            item = src.get(c)
            if item is END:
                dst.put(END, c)
                return
            _count_in(c, item)
            g.tick(name)
            out = fn(item)
            _count_out(c, out)
            dst.put(out, c)

    g.add(name, body)


def _build(g: _Graph) -> None:
    cfg = g.cfg
    fs = cfg.frame_size
    tables = g.tables
    V = cfg.replication

    s_opts = g.stream("options")
    s_points = g.stream("points")
    s_work = [g.stream(f"scatter->worker[{w}]") for w in range(V)]
    s_done = [g.stream(f"worker[{w}]->gather") for w in range(V)]
    s_dp = g.stream("default_probability")
    s_pay = g.stream("payment")
    s_off = g.stream("payoff")
    s_acc = g.stream("accrual")
    s_tot = g.stream("totals")
    s_res = g.stream("results")

    def ingest(c):
        opts = g.options
        for i in range(0, len(opts), fs):
            g.tick("ingest")
            blk = _OptionBlock(g.start_index + i, opts[i:i + fs])
            _count_out(c, blk)
            s_opts.put(blk, c)
        s_opts.put(END, c)

    def timegen(c):
        b_opt: list[int] = []
        b_t: list[float] = []
        b_prev: list[float] = []
        b_last: list[bool] = []
        metas: list[tuple[int, tuple]] = []  # (stream position of last point, meta)
        pos = 0  # points appended so far
        emitted = 0  # points already sent
        seq = 0

        def emit(n: int) -> None:
            nonlocal emitted, seq, b_opt, b_t, b_prev, b_last, metas
            end = emitted + n
            k = 0
            while k < len(metas) and metas[k][0] <= end:
                k += 1
            frame = PointFrame(
                seq,
                np.array(b_opt[:n], dtype=np.int64),
                np.array(b_t[:n], dtype=np.float64),
                np.array(b_prev[:n], dtype=np.float64),
                np.array(b_last[:n], dtype=np.bool_),
                [m for _, m in metas[:k]],
            )
            del b_opt[:n], b_t[:n], b_prev[:n], b_last[:n], metas[:k]
            emitted = end
            seq += 1
            _count_out(c, frame)
            s_points.put(frame, c)

        while True:
            blk = s_opts.get(c)
            if blk is END:
                break
            _count_in(c, blk)
            g.tick("timegen")
            for i, opt in enumerate(blk.options, start=blk.start):
                try:
                    pts = grid_points(opt.maturity, opt.payment_frequency)
                except CdsError as exc:
                    metas.append((pos, (i, None, str(exc))))
                    continue
                n = len(pts)
                b_opt.extend([i] * n)
                b_t.extend(pts)
                b_prev.append(0.0)
                b_prev.extend(pts[:-1])
                b_last.extend([False] * (n - 1))
                b_last.append(True)
                pos += n
                metas.append((pos, (i, opt.recovery_rate, None)))
                while len(b_t) >= fs:
                    emit(fs)
        if b_t or metas:
            emit(len(b_t))
        s_points.put(END, c)

    def scatter(c):
        k = 0
        while True:
            frame = s_points.get(c)
            if frame is END:
                for w in s_work:
                    w.put(END, c)
                return
            _count_in(c, frame)
            g.tick("scatter")
            s_work[k % V].put(frame, c)
            _count_out(c, frame)
            k += 1

    def make_worker(w: int):
        src, dst = s_work[w], s_done[w]
        name = f"worker[{w}]"

        def body(c):
            while True:
                f = src.get(c)
                if f is END:
                    dst.put(END, c)
                    return
                _count_in(c, f)
                g.tick(name)
                n = len(f)
                f.s = np.empty(n)
                f.d = np.empty(n)
                f.dm = np.empty(n)
                survival_discount_frame(
                    f.t, f.tprev, tables.seg_lo, tables.seg_hi, tables.seg_h,
                    tables.rate_times, tables.rate_values, cfg.lanes, f.s, f.d, f.dm,
                )
                _count_out(c, f)
                dst.put(f, c)

        return name, body

    def default_probability(c):
        carry = 1.0
        k = 0
        while True:
            f = s_done[k % V].get(c)
            if f is END:
                for j in range(1, V):
                    tail = s_done[(k + j) % V].get(c)
                    if tail is not END:
                        raise RuntimeError(f"worker {(k + j) % V} emitted a frame after END")
                s_dp.put(END, c)
                return
            if f.seq != k:
                raise RuntimeError(f"gather expected frame {k}, got {f.seq}")
            _count_in(c, f)
            g.tick("default_probability")
            s = f.s
            s_prev = np.empty_like(s)
            if s.shape[0]:
                s_prev[0] = carry
                s_prev[1:] = s[:-1]
                s_prev[f.tprev == 0.0] = 1.0
                carry = s[-1]
            f.dp = s_prev - s
            _count_out(c, f)
            s_dp.put(f, c)
            k += 1

    def payment(f):
        f.prem = (f.t - f.tprev) * f.d * f.s
        return f

    def payoff(f):
        f.dflt = f.dm * f.dp
        return f

    def accrual(f):
        f.accr = ((f.t - f.tprev) / 2.0) * f.dm * f.dp
        return f

    def accumulator(c):
        carry = np.zeros(3)
        while True:
            f = s_acc.get(c)
            if f is END:
                s_tot.put(END, c)
                return
            _count_in(c, f)
            g.tick("accumulator")
            sums = np.empty((int(f.last.sum()), 3))
            n_done = fold_per_option(f.last, f.prem, f.dflt, f.accr, carry, sums)
            rows = sums.tolist()
            records = []
            r = 0
            for index, recovery, error in f.metas:
                if error is not None:
                    records.append((index, recovery, error, None))
                else:
                    records.append((index, recovery, None, rows[r]))
                    r += 1
            if r != n_done:
                raise RuntimeError(f"frame {f.seq}: {n_done} options closed, {r} expected")
            out = _Totals(records)
            _count_out(c, out)
            s_tot.put(out, c)

    def combiner(c):
        while True:
            tot = s_tot.get(c)
            if tot is END:
                s_res.put(END, c)
                return
            _count_in(c, tot)
            g.tick("combiner")
            out = []
            for index, recovery, error, sums in tot.records:
                if error is not None:
                    out.append(PricingFailure(index, error))
                    continue
                prem, dflt, accr = sums
                legs = LegValues(prem, (1.0 - recovery) * dflt, accr)
                try:
                    out.append(SpreadResult(index, fair_spread(legs), legs))
                except DomainError as exc:
                    out.append(PricingFailure(index, str(exc)))
            blk = _Totals(out)
            _count_out(c, blk)
            s_res.put(blk, c)

    def emitter(c):
        expected = g.start_index
        while True:
            blk = s_res.get(c)
            if blk is END:
                return
            _count_in(c, blk)
            g.tick("emitter")
            for res in blk.records:
                if res.option_index != expected:
                    raise RuntimeError(
                        f"result order broken: expected {expected}, got {res.option_index}"
                    )
                expected += 1
                g.results.append(res)
            _count_out(c, blk)

    g.add("ingest", ingest)
    g.add("timegen", timegen)
    g.add("scatter", scatter)
    for w in range(V):
        g.add(*make_worker(w))
    g.add("default_probability", default_probability)
    _map_stage(g, "payment", s_dp, s_pay, payment)
    _map_stage(g, "payoff", s_pay, s_off, payoff)
    _map_stage(g, "accrual", s_off, s_acc, accrual)
    g.add("accumulator", accumulator)
    g.add("combiner", combiner)
    g.add("emitter", emitter)


def stage_names(config: EngineConfig) -> list[str]:
    return (["ingest", "timegen", "scatter"]
            + [f"worker[{w}]" for w in range(config.replication)]
            + ["default_probability", "payment", "payoff", "accrual",
               "accumulator", "combiner", "emitter"])


def run_pipeline(
    options: Sequence[CdsOption],
    interest: TermStructure,
    hazard: TermStructure,
    config: EngineConfig | None = None,
    *,
    start_index: int = 0,
    tables: CurveTables | None = None,
    stats: PipelineStats | None = None,
    stage_hook: Callable[[str], None] | None = None,
    engine: int = 0,
) -> list[SpreadResult | PricingFailure]:
    """Price a batch through the concurrent stage graph.

    Results come back in input order, indexed from ``start_index``. An
    option that cannot be priced yields a :class:`PricingFailure` in its
    slot; the rest of the batch is unaffected. ``stage_hook(stage_name)``
    is invoked once per frame in every stage (testing aid for injecting
    delays or faults).
    """
    config = config or EngineConfig()
    options = list(options)
    if not options:
        raise ValidationError("option batch is empty")
    for i, opt in enumerate(options):
        if not isinstance(opt, CdsOption):
            raise ValidationError(f"item {i} is not a CdsOption")
    if tables is None:
        tables = CurveTables.build(interest, hazard)
    if stats is not None:
        stats._note_run(tables)
    g = _Graph(options, tables, config, start_index, engine, stats, stage_hook)
    _build(g)
    return g.run()
