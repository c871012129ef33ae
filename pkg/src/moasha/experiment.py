"""Experiment configuration, the run driver and on-disk artifacts.

An experiment directory holds ``log.jsonl`` (one evaluation per line),
``metrics.csv`` (``t,hv,hv_diff``) and ``front.csv`` (the final front,
quantile-normalized against the run's own evaluations).
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from moasha.bench import AnalyticBenchmark, TabularBenchmark, generate_tabular
from moasha.core import EvaluationLog
from moasha.executors import ExecutionStats, SimulatedExecutor, WallClockExecutor
from moasha.metrics import (
    EcdfNormalizer,
    FrontApproximation,
    MetricSeries,
    accumulate_reference_front,
    anytime_hypervolume,
    normalize_pool,
)
from moasha.pareto import Candidate, pareto_front_mask, selector_eps_net, selector_nsga_ii
from moasha.scalarize import ScalarizedSelector
from moasha.scheduler import MOASHA, BaseScheduler, RandomSearch, Selector

logger = logging.getLogger(__name__)

METHODS = ("RS", "ASHA+RW", "ASHA+ParEGO", "ASHA+Golovin", "ASHA+NSGA-II", "ASHA+EpsNet")
BENCHMARKS = ("tabular", "concave", "convex", "file")
CLOCKS = ("simulated", "wall")

LOG_FILE = "log.jsonl"
METRICS_FILE = "metrics.csv"
FRONT_FILE = "front.csv"
CONFIG_FILE = "config.json"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "ASHA+EpsNet"
    benchmark: str = "tabular"
    benchmark_path: str | None = None
    n_configs: int = 1000
    n_objectives: int = 2
    input_dim: int = 5
    sigma: float = 0.1
    curve_noise: float = 0.0
    benchmark_seed: int = 0
    workers: int = 4
    time_budget: float = 3600.0
    seed: int = 0
    eta: int = 3
    r0: float = 1
    R: float | None = None
    s: int = 0
    m: int = 100
    rho: float = 0.05
    clock: str = "simulated"
    normalize_selector: bool = False
    time_scale: float = 1e-3
    max_configs: int | None = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}; choose from {', '.join(BENCHMARKS)}")
        if self.benchmark == "file" and not self.benchmark_path:
            raise ConfigError("benchmark 'file' needs benchmark_path")
        if self.clock not in CLOCKS:
            raise ConfigError(f"clock must be one of {CLOCKS}, got {self.clock!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.time_budget > 0:
            raise ConfigError("time_budget must be > 0")
        if self.eta < 2:
            raise ConfigError("eta must be >= 2")
        if self.r0 <= 0 or (self.R is not None and self.r0 > self.R):
            raise ConfigError("need 0 < r0 <= R")
        if self.s < 0:
            raise ConfigError("s must be >= 0")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.n_objectives < 2:
            raise ConfigError("n_objectives must be >= 2")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a flat JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes: Any) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


def method_slug(method: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", method.lower()).strip("-")


@functools.lru_cache(maxsize=8)
def _tabular(n_configs: int, seed: int, n_objectives: int, max_budget: int, noise: float) -> TabularBenchmark:
    return generate_tabular(n_configs, seed, n_objectives, max_budget, noise)


def build_benchmark(config: ExperimentConfig) -> TabularBenchmark | AnalyticBenchmark:
    if config.benchmark == "tabular":
        R = int(config.R) if config.R is not None else 200
        return _tabular(config.n_configs, config.benchmark_seed, config.n_objectives, R, config.curve_noise)
    if config.benchmark == "file":
        return TabularBenchmark.load(config.benchmark_path)
    R = config.R if config.R is not None else 81
    return AnalyticBenchmark(config.benchmark, config.input_dim, config.sigma, R, config.benchmark_seed)


class NormalizedSelector:
    """Quantile-normalize a rung's objectives before handing it to ``inner``."""

    def __init__(self, inner: Selector) -> None:
        self.inner = inner

    def __call__(self, pool, count=None, *, limit=None):
        if not pool:
            return []
        y = normalize_pool([c.objectives for c in pool])
        normalized = [Candidate(c.config_id, tuple(row)) for c, row in zip(pool, y)]
        return self.inner(normalized, count, limit=limit)


def build_selector(config: ExperimentConfig) -> Selector:
    scalarized = {"ASHA+RW": "rw", "ASHA+ParEGO": "parego", "ASHA+Golovin": "golovin"}
    if config.method in scalarized:
        return ScalarizedSelector(
            scalarized[config.method],
            n_weights=config.m,
            experiment_seed=config.seed,
            rho=config.rho,
            normalize=config.normalize_selector,
        )
    geometric = {"ASHA+NSGA-II": selector_nsga_ii, "ASHA+EpsNet": selector_eps_net}
    if config.method not in geometric:
        raise ConfigError(f"{config.method} has no selector")
    selector = geometric[config.method]
    return NormalizedSelector(selector) if config.normalize_selector else selector


def build_scheduler(config: ExperimentConfig, benchmark) -> BaseScheduler:
    R = benchmark.max_budget
    if config.method == "RS":
        return RandomSearch(benchmark.search_space(), R=R, seed=config.seed, max_configs=config.max_configs)
    return MOASHA(
        benchmark.search_space(),
        build_selector(config),
        eta=config.eta,
        r0=config.r0,
        R=R,
        s=config.s,
        seed=config.seed,
        max_configs=config.max_configs,
    )


def build_executor(config: ExperimentConfig):
    if config.clock == "wall":
        return WallClockExecutor(config.workers, config.time_budget, config.time_scale)
    return SimulatedExecutor(config.workers, config.time_budget)


def final_front(log: EvaluationLog, normalizer: EcdfNormalizer | None = None) -> np.ndarray:
    """Normalized non-dominated objective vectors of ``log``, sorted by the first objective."""
    raw = log.objectives()
    if raw.size == 0:
        return raw
    y = (normalizer or EcdfNormalizer(raw))(raw)
    front = np.unique(y[pareto_front_mask(y)], axis=0)
    return front


def compute_metrics(
    logs: Iterable[EvaluationLog],
) -> tuple[list[MetricSeries], FrontApproximation | None]:
    """Anytime hypervolume for each log against the pooled reference front."""
    logs = list(logs)
    pooled = [r.objectives for log in logs for r in log.records()]
    if not pooled:
        return [MetricSeries() for _ in logs], None
    normalizer = EcdfNormalizer(pooled)
    reference = accumulate_reference_front(logs, normalizer)
    series = [anytime_hypervolume(log, reference, normalizer) if len(log) else MetricSeries() for log in logs]
    return series, reference


def front_to_csv(points: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = points.shape[1] if points.ndim == 2 and points.size else 0
    writer.writerow([f"y{j}" for j in range(n)])
    for row in points:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    log: EvaluationLog
    metrics: MetricSeries
    front: np.ndarray
    stats: ExecutionStats

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.log.save(out / LOG_FILE)
        (out / METRICS_FILE).write_text(self.metrics.to_csv(), encoding="utf-8")
        (out / FRONT_FILE).write_text(front_to_csv(self.front), encoding="utf-8")
        (out / CONFIG_FILE).write_text(json.dumps(self.config.to_dict(), indent=2) + "\n", encoding="utf-8")
        return out


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    config.validate()
    benchmark = build_benchmark(config)
    scheduler = build_scheduler(config, benchmark)
    stats = build_executor(config).run(scheduler, benchmark)
    log = scheduler.log
    logger.info("%s seed=%d: %d evaluations", config.method, config.seed, len(log))
    (series,), _ = compute_metrics([log])
    result = ExperimentResult(config, log, series, final_front(log), stats)
    if out_dir is not None:
        result.write(out_dir)
    return result
