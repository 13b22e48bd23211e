"""Streaming harness: admission control, the deterministic stream simulator,
the threaded real-time runner, and timing benchmarks.

The FlowLimiter bounds how many frames are in flight at once. When the
pipeline is saturated, one arriving frame waits in a single slot and any
newer arrival replaces it (newest wins; the replaced frame counts as
dropped). When the source ends, a frame still waiting in the slot is stale
and is dropped; in-flight work drains normally.
"""

from __future__ import annotations

import statistics
import threading
import time
from dataclasses import dataclass
from queue import Queue
from typing import Callable, Iterable, Optional

from .atlas import AtlasProgram, compile_atlas, parse_atlas
from .evaluator import EvaluatedAtlas, evaluate_atlas
from .geometry import LandmarkFrame, SemanticsConfig, align_frame, extract_hairline


class FlowLimiter:
    """Admission controller with a single newest-wins waiting slot.

    Thread safe; the deterministic simulator and the threaded runner share
    this object. ``in_flight`` counts frames admitted but not yet completed.
    """

    def __init__(self, max_in_flight: int = 1):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.max_in_flight = max_in_flight
        self.admitted = 0
        self.dropped = 0
        self.completed = 0
        self._in_flight = 0
        self._slot = None
        self._lock = threading.Condition()

    @property
    def in_flight(self) -> int:
        return self._in_flight

    def _check(self) -> None:
        assert 0 <= self._in_flight <= self.max_in_flight
        assert self.completed + self._in_flight == self.admitted

    def offer(self, item):
        """Submit an arriving item.

        Returns ``("admitted", item)`` when capacity allows, otherwise parks
        the item and returns ``("parked", replaced)`` where ``replaced`` is
        the previously waiting item now dropped (or None).
        """
        with self._lock:
            if self._in_flight < self.max_in_flight:
                self._in_flight += 1
                self.admitted += 1
                self._check()
                return ("admitted", item)
            replaced = self._slot
            self._slot = item
            if replaced is not None:
                self.dropped += 1
            self._check()
            return ("parked", replaced)

    def complete(self):
        """Mark one in-flight item done; admit and return the waiting item
        if there is one and capacity allows, else None."""
        with self._lock:
            assert self._in_flight > 0, "complete() without an in-flight item"
            self._in_flight -= 1
            self.completed += 1
            nxt = None
            if self._slot is not None and self._in_flight < self.max_in_flight:
                nxt = self._slot
                self._slot = None
                self._in_flight += 1
                self.admitted += 1
            self._check()
            self._lock.notify_all()
            return nxt

    def flush(self):
        """End of stream: drop a still-waiting item (it has no consumer)."""
        with self._lock:
            stale = self._slot
            self._slot = None
            if stale is not None:
                self.dropped += 1
            self._check()
            return stale

    def wait_quiescent(self, timeout: Optional[float] = None) -> bool:
        with self._lock:
            return self._lock.wait_for(lambda: self._in_flight == 0, timeout)


# ---------------------------------------------------------------------------
# Timing aggregates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimingAggregate:
    """Microsecond summary of one measured stage."""

    median_us: float
    p95_us: float
    mean_us: float
    count: int

    @classmethod
    def of(cls, samples_us: list[float]) -> "TimingAggregate":
        if not samples_us:
            return cls(0.0, 0.0, 0.0, 0)
        ordered = sorted(samples_us)
        p95 = ordered[min(len(ordered) - 1, int(0.95 * len(ordered)))]
        return cls(
            median_us=statistics.median(ordered),
            p95_us=p95,
            mean_us=statistics.fmean(ordered),
            count=len(ordered),
        )

    def as_dict(self) -> dict:
        return {
            "median_us": self.median_us,
            "p95_us": self.p95_us,
            "mean_us": self.mean_us,
            "count": self.count,
        }


@dataclass(frozen=True)
class StageTiming:
    """Per-stage and end-to-end frame timing. Stage medians need not sum to
    the end-to-end median."""

    alignment: TimingAggregate
    hairline: TimingAggregate
    evaluation: TimingAggregate
    end_to_end: TimingAggregate
    parse_compile: TimingAggregate

    def as_dict(self) -> dict:
        return {
            "alignment": self.alignment.as_dict(),
            "hairline": self.hairline.as_dict(),
            "evaluation": self.evaluation.as_dict(),
            "end_to_end": self.end_to_end.as_dict(),
            "parse_compile": self.parse_compile.as_dict(),
        }

    def summary_line(self) -> str:
        return (
            f"bench: parse+compile {self.parse_compile.median_us / 1000:.3f} ms, "
            f"evaluate {self.end_to_end.median_us / 1000:.3f} ms "
            f"(align {self.alignment.median_us / 1000:.3f}, "
            f"hairline {self.hairline.median_us / 1000:.3f}, "
            f"generate {self.evaluation.median_us / 1000:.3f}; "
            f"n={self.end_to_end.count})"
        )


# ---------------------------------------------------------------------------
# Deterministic stream simulation (virtual clock)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamSummary:
    admitted: int
    dropped: int
    completed: int
    malformed: int = 0
    sink_errors: int = 0
    output_ts: tuple = ()
    elapsed_s: float = 0.0
    evaluation: TimingAggregate = TimingAggregate(0.0, 0.0, 0.0, 0)

    @property
    def fps(self) -> float:
        return self.completed / self.elapsed_s if self.elapsed_s > 0 else 0.0

    def as_dict(self) -> dict:
        return {
            "admitted": self.admitted,
            "dropped": self.dropped,
            "completed": self.completed,
            "malformed": self.malformed,
            "sink_errors": self.sink_errors,
            "elapsed_s": self.elapsed_s,
            "fps": self.fps,
            "evaluation": self.evaluation.as_dict(),
        }


_COMPLETION = 0  # at equal virtual times, completions run before arrivals
_ARRIVAL = 1


def simulate_stream(
    arrivals_us: list[int],
    service_us,
    max_in_flight: int = 1,
    on_event: Optional[Callable] = None,
) -> StreamSummary:
    """Drive the limiter policy deterministically on a virtual clock.

    ``arrivals_us`` are strictly increasing arrival timestamps; ``service_us``
    is a constant or a ``f(ts) -> int``. One virtual worker serves admitted
    frames in order. ``on_event(time_us, kind, ts, in_flight)`` observes every
    event for invariant checks.
    """
    if any(b <= a for a, b in zip(arrivals_us, arrivals_us[1:])):
        raise ValueError("arrival timestamps must strictly increase")
    service = service_us if callable(service_us) else (lambda _ts: service_us)

    limiter = FlowLimiter(max_in_flight)
    queue: list[int] = []  # admitted, awaiting the worker
    busy_until: Optional[tuple[int, int]] = None  # (finish time, ts)
    output: list[int] = []

    def notify(now: int, kind: str, ts: int) -> None:
        if on_event is not None:
            on_event(now, kind, ts, limiter.in_flight)

    def start_next(now: int) -> None:
        nonlocal busy_until
        if busy_until is None and queue:
            ts = queue.pop(0)
            busy_until = (now + int(service(ts)), ts)

    def run_completions(until: Optional[int]) -> None:
        nonlocal busy_until
        while busy_until is not None and (until is None or busy_until[0] <= until):
            now, ts = busy_until
            busy_until = None
            output.append(ts)
            follow = limiter.complete()
            notify(now, "complete", ts)
            if follow is not None:
                queue.append(follow)
                notify(now, "admit", follow)
            start_next(now)

    for ts in arrivals_us:
        run_completions(until=ts)
        status, value = limiter.offer(ts)
        if status == "admitted":
            queue.append(ts)
            notify(ts, "admit", ts)
            start_next(ts)
        else:
            notify(ts, "park", ts)
            if value is not None:
                notify(ts, "drop", value)

    stale = limiter.flush()
    if stale is not None:
        notify(arrivals_us[-1] if arrivals_us else 0, "drop", stale)
    run_completions(until=None)

    assert limiter.in_flight == 0 and not queue
    return StreamSummary(
        admitted=limiter.admitted,
        dropped=limiter.dropped,
        completed=limiter.completed,
        output_ts=tuple(output),
    )


# ---------------------------------------------------------------------------
# Threaded real-time runner
# ---------------------------------------------------------------------------

def run_stream(
    source: Iterable[LandmarkFrame],
    program: AtlasProgram,
    cfg: SemanticsConfig,
    limiter: Optional[FlowLimiter] = None,
    sink: Optional[Callable[[EvaluatedAtlas], None]] = None,
) -> StreamSummary:
    """Run frames through the evaluator behind the limiter.

    An admitter (this thread) reads the source and applies admission
    control; a processor thread evaluates admitted frames in order and hands
    results to ``sink``. Malformed frames (including timestamp regressions)
    are counted and skipped.
    """
    limiter = limiter or FlowLimiter()
    handoff: Queue = Queue()
    eval_us: list[float] = []
    output_ts: list[int] = []
    done = threading.Event()

    sink_errors: list[Exception] = []

    def worker() -> None:
        while True:
            frame = handoff.get()
            if frame is None:
                break
            try:
                t0 = time.perf_counter_ns()
                result = evaluate_atlas(program, frame, cfg)
                eval_us.append((time.perf_counter_ns() - t0) / 1000.0)
                output_ts.append(result.timestamp)
                if sink is not None:
                    sink(result)
            except Exception as e:  # a broken sink must not wedge the run
                sink_errors.append(e)
            finally:
                follow = limiter.complete()
                if follow is not None:
                    handoff.put(follow)
        done.set()

    thread = threading.Thread(target=worker, name="faceatlas-processor", daemon=True)
    started = time.perf_counter()
    thread.start()

    malformed = 0
    last_ts: Optional[int] = None
    for frame in source:
        if not isinstance(frame, LandmarkFrame) or (last_ts is not None and frame.timestamp <= last_ts):
            malformed += 1
            continue
        last_ts = frame.timestamp
        status, value = limiter.offer(frame)
        if status == "admitted":
            handoff.put(frame)
        # parked: a replaced waiter was already counted dropped by the limiter

    limiter.flush()
    limiter.wait_quiescent(timeout=60.0)
    handoff.put(None)
    done.wait(timeout=60.0)
    elapsed = time.perf_counter() - started

    return StreamSummary(
        admitted=limiter.admitted,
        dropped=limiter.dropped,
        completed=limiter.completed,
        malformed=malformed,
        sink_errors=len(sink_errors),
        output_ts=tuple(output_ts),
        elapsed_s=elapsed,
        evaluation=TimingAggregate.of(eval_us),
    )


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------

def bench(
    atlas_text: str,
    frame: LandmarkFrame,
    cfg: SemanticsConfig,
    iterations: int = 1000,
) -> StageTiming:
    """Median-of-N timing for setup (parse+compile) and the per-frame stages.

    Medians resist scheduler noise better than means; a short warmup runs
    first so allocator and cache effects settle.
    """
    program = compile_atlas(parse_atlas(atlas_text))

    for _ in range(20):  # warmup
        evaluate_atlas(program, frame, cfg)

    parse_us, align_us, hair_us, gen_us, total_us = [], [], [], [], []
    for _ in range(iterations):
        t0 = time.perf_counter_ns()
        compile_atlas(parse_atlas(atlas_text))
        parse_us.append((time.perf_counter_ns() - t0) / 1000.0)

    for _ in range(iterations):
        t0 = time.perf_counter_ns()
        aligned = align_frame(frame, cfg)
        t1 = time.perf_counter_ns()
        extract_hairline(frame, aligned, cfg)
        t2 = time.perf_counter_ns()
        align_us.append((t1 - t0) / 1000.0)
        hair_us.append((t2 - t1) / 1000.0)

        t3 = time.perf_counter_ns()
        evaluate_atlas(program, frame, cfg)
        t4 = time.perf_counter_ns()
        total_us.append((t4 - t3) / 1000.0)
        gen_us.append((t4 - t3) / 1000.0 - (t2 - t0) / 1000.0)

    return StageTiming(
        alignment=TimingAggregate.of(align_us),
        hairline=TimingAggregate.of(hair_us),
        evaluation=TimingAggregate.of([max(0.0, g) for g in gen_us]),
        end_to_end=TimingAggregate.of(total_us),
        parse_compile=TimingAggregate.of(parse_us),
    )
