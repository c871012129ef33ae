"""Asynchronous multi-objective successive halving and its baselines.

Schedulers expose two transitions, ``get_job()`` and ``report_result()``
(plus ``report_failure()``). Both take the scheduler lock, so any number of
worker threads may drive one scheduler. An executor (see
:mod:`moasha.executors`) owns the clock and calls these transitions.

A selector is any callable ``selector(pool, count, *, limit=None)`` that
ranks a list of :class:`~moasha.pareto.Candidate` best-first and returns
config ids.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from moasha.core import (
    Configuration,
    EvaluationLog,
    EvaluationRecord,
    SearchSpace,
    as_objectives,
    sample_configuration,
)
from moasha.pareto import Candidate

logger = logging.getLogger(__name__)

Selector = Callable[..., list]


class ProtocolError(RuntimeError):
    """A result was reported for a job that is unknown or already reported."""


class Benchmark(Protocol):
    max_budget: float

    def search_space(self) -> SearchSpace: ...

    def evaluate(self, config: Configuration, budget: float) -> tuple[tuple[float, ...], float]: ...


class Executor(Protocol):
    def run(self, scheduler: "BaseScheduler", benchmark: Benchmark): ...


def max_rung_index(eta: int, r0: float, R: float, s: int = 0) -> int:
    """K = floor(log_eta(R / r0)) - s, computed without floating log round-off."""
    j = 0
    while r0 * eta ** (j + 1) <= R * (1 + 1e-12):
        j += 1
    return j - s


def budget_ladder(eta: int, r0: float, R: float, s: int = 0) -> list[float]:
    """Budgets for rungs 0..K. The top rung always runs at exactly ``R``."""
    if eta < 2:
        raise ValueError(f"eta must be >= 2, got {eta}")
    if not 0 < r0 <= R:
        raise ValueError(f"need 0 < r0 <= R, got r0={r0}, R={R}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    K = max_rung_index(eta, r0, R, s)
    if K < 0:
        raise ValueError(f"bracket offset s={s} leaves no rungs")
    ladder = [float(min(r0 * eta ** (s + k), R)) for k in range(K)]
    return ladder + [float(R)]


@dataclass
class Rung:
    budget: float
    # insertion order is completion order
    completed: dict[int, tuple[float, ...]] = field(default_factory=dict)
    promoted: set[int] = field(default_factory=set)


class RungTable:
    def __init__(self, eta: int = 3, r0: float = 1, R: float = 81, s: int = 0) -> None:
        self.eta, self.r0, self.R, self.s = eta, r0, R, s
        self.rungs = [Rung(b) for b in budget_ladder(eta, r0, R, s)]

    @property
    def K(self) -> int:
        return len(self.rungs) - 1

    def budget(self, k: int) -> float:
        return self.rungs[k].budget

    def quota(self, k: int) -> int:
        return len(self.rungs[k].completed) // self.eta

    def populations(self) -> list[int]:
        return [len(r.completed) for r in self.rungs]

    def check_invariants(self) -> None:
        for k, rung in enumerate(self.rungs):
            if not rung.promoted <= rung.completed.keys():
                raise AssertionError(f"rung {k}: promoted configs that never completed")
            if len(rung.promoted) > self.quota(k):
                raise AssertionError(
                    f"rung {k}: {len(rung.promoted)} promoted > floor({len(rung.completed)}/{self.eta})"
                )
        if self.rungs[-1].promoted:
            raise AssertionError("top rung cannot promote")


@dataclass(frozen=True)
class Job:
    config: Configuration
    rung: int
    budget: float


class BaseScheduler:
    """Config sampling, job bookkeeping and logging shared by all schedulers."""

    def __init__(
        self,
        space: SearchSpace,
        *,
        seed: int = 0,
        max_configs: int | None = None,
        log: EvaluationLog | None = None,
    ) -> None:
        self.space = space
        self.seed = seed
        self.max_configs = max_configs
        self.log = log if log is not None else EvaluationLog()
        self.rng = np.random.default_rng(seed)
        self.configs: dict[int, Configuration] = {}
        self.failed: set[int] = set()
        self._pending: dict[tuple[int, int], Job] = {}
        self._reported: set[tuple[int, int]] = set()
        self._lock = threading.RLock()

    def _budget(self, rung: int) -> float:
        raise NotImplementedError

    def _can_sample(self) -> bool:
        return self.max_configs is None or len(self.configs) < self.max_configs

    def _fresh_config(self) -> Configuration:
        cid = len(self.configs)
        config = sample_configuration(self.space, self.rng, cid, self.seed)
        self.configs[cid] = config
        return config

    def _issue(self, config: Configuration, rung: int) -> Job:
        job = Job(config, rung, self._budget(rung))
        self._pending[(config.id, rung)] = job
        return job

    def _peek_pending(self, config_id: int, rung: int) -> Job:
        key = (config_id, rung)
        if key in self._reported:
            raise ProtocolError(f"duplicate report for config {config_id} at rung {rung}")
        job = self._pending.get(key)
        if job is None:
            raise ProtocolError(f"no job issued for config {config_id} at rung {rung}")
        return job

    def _take_pending(self, config_id: int, rung: int) -> Job:
        job = self._peek_pending(config_id, rung)
        del self._pending[(config_id, rung)]
        self._reported.add((config_id, rung))
        return job

    @property
    def pending(self) -> int:
        return len(self._pending)

    def get_job(self) -> Job | None:
        raise NotImplementedError

    def _on_result(self, job: Job, y: tuple[float, ...]) -> None:
        pass

    def report_result(
        self,
        config_id: int,
        rung: int,
        objectives: Sequence[float],
        t_start: float = 0.0,
        t_end: float = 0.0,
    ) -> None:
        y = as_objectives(objectives)
        with self._lock:
            job = self._peek_pending(config_id, rung)
            record = EvaluationRecord(config_id, rung, job.budget, y, t_start, t_end)
            self._take_pending(config_id, rung)
            self._on_result(job, y)
            self.log.append(record)

    def report_failure(self, config_id: int, rung: int) -> None:
        """Drop a failed evaluation; the configuration leaves the race."""
        with self._lock:
            self._take_pending(config_id, rung)
            self.failed.add(config_id)
            logger.warning("evaluation failed for config %d at rung %d; dropped", config_id, rung)


class MOASHA(BaseScheduler):
    """Asynchronous successive halving with a pluggable multi-objective selector.

    ``get_job`` scans rungs from the second highest down to 0. At rung k the
    selector ranks the completed candidates and the top
    ``floor(|completed| / eta)`` are eligible; the best not yet promoted is
    promoted to rung k + 1. A rung whose promotion quota is used up is
    skipped without ranking. When nothing is promotable a fresh
    configuration starts at rung 0, or ``None`` is returned once
    ``max_configs`` configurations have been sampled.
    """

    def __init__(
        self,
        space: SearchSpace,
        selector: Selector,
        *,
        eta: int = 3,
        r0: float = 1,
        R: float = 81,
        s: int = 0,
        seed: int = 0,
        max_configs: int | None = None,
        log: EvaluationLog | None = None,
    ) -> None:
        super().__init__(space, seed=seed, max_configs=max_configs, log=log)
        self.selector = selector
        self.table = RungTable(eta, r0, R, s)

    def _budget(self, rung: int) -> float:
        return self.table.budget(rung)

    def get_job(self) -> Job | None:
        with self._lock:
            table = self.table
            for k in range(table.K - 1, -1, -1):
                rung = table.rungs[k]
                quota = table.quota(k)
                if len(rung.promoted) >= quota:
                    continue
                pool = [Candidate(cid, y) for cid, y in rung.completed.items()]
                ranking = self.selector(pool, quota, limit=quota)
                for cid in ranking[:quota]:
                    if cid not in rung.promoted:
                        rung.promoted.add(cid)
                        return self._issue(self.configs[cid], k + 1)
            if not self._can_sample():
                return None
            return self._issue(self._fresh_config(), 0)

    def _on_result(self, job: Job, y: tuple[float, ...]) -> None:
        self.table.rungs[job.rung].completed[job.config.id] = y


class RandomSearch(BaseScheduler):
    """Every configuration is evaluated once, at the full budget ``R``."""

    def __init__(self, space: SearchSpace, *, R: float, seed: int = 0, **kwargs) -> None:
        super().__init__(space, seed=seed, **kwargs)
        self.R = R

    def _budget(self, rung: int) -> float:
        return float(self.R)

    def get_job(self) -> Job | None:
        with self._lock:
            if not self._can_sample():
                return None
            return self._issue(self._fresh_config(), 0)


class SynchronousSH(BaseScheduler):
    """Synchronous successive halving: each rung waits for all of its evaluations.

    Brackets start with ``eta ** K`` configurations at rung 0; after every
    rung completes, the selector's top ``floor(n / eta)`` move up. Workers
    with nothing to run get ``None`` and sit idle. Used as the baseline that
    shows the cost of synchronization.
    """

    def __init__(
        self,
        space: SearchSpace,
        selector: Selector,
        *,
        eta: int = 3,
        r0: float = 1,
        R: float = 81,
        s: int = 0,
        seed: int = 0,
        bracket_size: int | None = None,
        max_configs: int | None = None,
        log: EvaluationLog | None = None,
    ) -> None:
        super().__init__(space, seed=seed, max_configs=max_configs, log=log)
        self.selector = selector
        self.table = RungTable(eta, r0, R, s)
        self.bracket_size = bracket_size or eta**self.table.K
        self._rung = 0
        self._queue: list[Configuration] = []
        self._outstanding = 0
        self._results: dict[int, tuple[float, ...]] = {}
        self._start_bracket()

    def _budget(self, rung: int) -> float:
        return self.table.budget(rung)

    def _start_bracket(self) -> None:
        self._rung = 0
        self._results = {}
        self._queue = []
        while len(self._queue) < self.bracket_size and self._can_sample():
            self._queue.append(self._fresh_config())
        self._outstanding = len(self._queue)

    def _advance(self) -> None:
        # current rung is finished: promote or open a new bracket
        eta = self.table.eta
        survivors = len(self._results) // eta
        if self._rung < self.table.K and survivors > 0:
            pool = [Candidate(cid, y) for cid, y in self._results.items()]
            ranking = self.selector(pool, survivors, limit=survivors)[:survivors]
            self.table.rungs[self._rung].promoted.update(ranking)
            self._rung += 1
            self._results = {}
            self._queue = [self.configs[cid] for cid in ranking]
            self._outstanding = len(self._queue)
        else:
            self._start_bracket()

    def get_job(self) -> Job | None:
        with self._lock:
            if not self._queue:
                if self._outstanding > 0:
                    return None  # rung still running: wait
                self._advance()
            if not self._queue:
                return None
            return self._issue(self._queue.pop(0), self._rung)

    def _on_result(self, job: Job, y: tuple[float, ...]) -> None:
        self.table.rungs[job.rung].completed[job.config.id] = y
        self._results[job.config.id] = y
        self._outstanding -= 1

    def report_failure(self, config_id: int, rung: int) -> None:
        with self._lock:
            super().report_failure(config_id, rung)
            self._outstanding -= 1


def run_mo_asha(
    benchmark: Benchmark,
    executor: Executor,
    selector: Selector,
    *,
    eta: int = 3,
    r0: float = 1,
    R: float | None = None,
    s: int = 0,
    seed: int = 0,
    max_configs: int | None = None,
) -> EvaluationLog:
    scheduler = MOASHA(
        benchmark.search_space(),
        selector,
        eta=eta,
        r0=r0,
        R=benchmark.max_budget if R is None else R,
        s=s,
        seed=seed,
        max_configs=max_configs,
    )
    executor.run(scheduler, benchmark)
    return scheduler.log


def run_random_search(
    benchmark: Benchmark,
    executor: Executor,
    *,
    R: float | None = None,
    seed: int = 0,
    max_configs: int | None = None,
) -> EvaluationLog:
    scheduler = RandomSearch(
        benchmark.search_space(),
        R=benchmark.max_budget if R is None else R,
        seed=seed,
        max_configs=max_configs,
    )
    executor.run(scheduler, benchmark)
    return scheduler.log
