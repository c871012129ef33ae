"""Executors drive a scheduler against a benchmark.

:class:`SimulatedExecutor` is a single-threaded discrete-event loop on a
virtual clock: each evaluation occupies its worker for the benchmark's
simulated duration. :class:`WallClockExecutor` runs real threads and sleeps
``duration * time_scale`` seconds per evaluation.

Both stop at ``time_budget``. Evaluations that would end after it are
discarded, as are workers' partial results.
"""

from __future__ import annotations

import heapq
import logging
import threading
import time
from dataclasses import dataclass, field

from moasha.scheduler import BaseScheduler, Benchmark, Job

logger = logging.getLogger(__name__)

MAX_CONSECUTIVE_FAILURES = 1000


@dataclass
class ExecutionStats:
    workers: int
    horizon: float = 0.0
    busy_time: float = 0.0
    evaluations: int = 0
    failures: int = 0
    max_in_flight: int = 0
    # (worker, t_start, t_end) for every evaluation that was started
    trace: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def idle_fraction(self) -> float:
        capacity = self.workers * self.horizon
        return 0.0 if capacity <= 0 else max(0.0, 1.0 - self.busy_time / capacity)


class SimulatedExecutor:
    def __init__(self, workers: int = 4, time_budget: float = float("inf")) -> None:
        if workers < 1:
            raise ValueError("need at least one worker")
        self.workers = workers
        self.time_budget = time_budget

    def run(self, scheduler: BaseScheduler, benchmark: Benchmark) -> ExecutionStats:
        stats = ExecutionStats(self.workers)
        idle = list(range(self.workers))
        events: list[tuple[float, int, int, Job, tuple[float, ...], float]] = []
        seq = 0
        failures_in_row = 0

        def dispatch(now: float) -> None:
            nonlocal seq, failures_in_row
            while idle and now < self.time_budget:
                job = scheduler.get_job()
                if job is None:
                    return
                try:
                    y, duration = benchmark.evaluate(job.config, job.budget)
                except Exception:
                    logger.exception("evaluation of config %d failed", job.config.id)
                    scheduler.report_failure(job.config.id, job.rung)
                    stats.failures += 1
                    failures_in_row += 1
                    if failures_in_row >= MAX_CONSECUTIVE_FAILURES:
                        raise RuntimeError("too many consecutive evaluation failures")
                    continue
                failures_in_row = 0
                worker = idle.pop(0)
                heapq.heappush(events, (now + duration, seq, worker, job, y, now))
                seq += 1
                stats.trace.append((worker, now, now + duration))
                stats.max_in_flight = max(stats.max_in_flight, len(events))

        dispatch(0.0)
        now = 0.0
        while events and events[0][0] <= self.time_budget:
            t_end, _, worker, job, y, t_start = heapq.heappop(events)
            now = t_end
            scheduler.report_result(job.config.id, job.rung, y, t_start, t_end)
            stats.evaluations += 1
            stats.busy_time += t_end - t_start
            idle.append(worker)
            idle.sort()
            dispatch(now)
        if events:
            # budget ran out with evaluations in flight; they count as busy until the cut
            stats.horizon = self.time_budget
            stats.busy_time += sum(self.time_budget - ev[5] for ev in events)
        else:
            stats.horizon = now
        return stats


class WallClockExecutor:
    def __init__(
        self,
        workers: int = 4,
        time_budget: float = 60.0,
        time_scale: float = 1e-3,
        poll_interval: float = 1e-3,
    ) -> None:
        if workers < 1:
            raise ValueError("need at least one worker")
        self.workers = workers
        self.time_budget = time_budget
        self.time_scale = time_scale
        self.poll_interval = poll_interval

    def run(self, scheduler: BaseScheduler, benchmark: Benchmark) -> ExecutionStats:
        stats = ExecutionStats(self.workers)
        stats_lock = threading.Lock()
        origin = time.monotonic()

        def elapsed() -> float:
            return time.monotonic() - origin

        def worker_loop(worker: int) -> None:
            while elapsed() < self.time_budget:
                job = scheduler.get_job()
                if job is None:
                    time.sleep(self.poll_interval)
                    continue
                t_start = elapsed()
                try:
                    y, duration = benchmark.evaluate(job.config, job.budget)
                except Exception:
                    logger.exception("evaluation of config %d failed", job.config.id)
                    scheduler.report_failure(job.config.id, job.rung)
                    with stats_lock:
                        stats.failures += 1
                    continue
                time.sleep(duration * self.time_scale)
                t_end = elapsed()
                if t_end > self.time_budget:
                    return
                scheduler.report_result(job.config.id, job.rung, y, t_start, t_end)
                with stats_lock:
                    stats.evaluations += 1
                    stats.busy_time += t_end - t_start
                    stats.trace.append((worker, t_start, t_end))

        threads = [
            threading.Thread(target=worker_loop, args=(w,), name=f"moasha-worker-{w}", daemon=True)
            for w in range(self.workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        stats.horizon = min(elapsed(), self.time_budget)
        stats.max_in_flight = self.workers
        return stats
