"""Synthetic multi-fidelity benchmarks.

Two families:

* :class:`TabularBenchmark` stores a learning curve per configuration and
  objective, like a tabular NAS benchmark. Generated tables pair a decaying
  error curve with a budget-independent cost objective.
* :class:`AnalyticBenchmark` is a ZDT-style two-objective problem whose
  full-fidelity Pareto front is known in closed form (concave or convex).
  Lower budgets add non-negative noise of size ``sigma / sqrt(budget)``.

Evaluations return ``(objectives, duration)`` where the simulated duration is
``budget * unit_cost`` and the per-configuration unit cost lies in [0.5, 2].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from moasha.core import Configuration, Dimension, SearchSpace
from moasha.metrics import FrontApproximation
from moasha.pareto import pareto_front_mask

TABULAR_FORMAT = "moasha-tabular/1"
UNIT_COST_RANGE = (0.5, 2.0)


def _check_budget(budget: float, max_budget: float) -> None:
    if not 1 <= budget <= max_budget:
        raise ValueError(f"budget {budget} outside [1, {max_budget}]")


@dataclass(frozen=True, eq=False)
class TabularBenchmark:
    curves: np.ndarray  # (configs, max_budget, n): objective vector at budget r is curves[:, r - 1]
    unit_cost: np.ndarray  # (configs,)
    objective_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.curves.ndim != 3 or self.curves.shape[2] < 2:
            raise ValueError(f"curves must have shape (configs, budgets, n>=2), got {self.curves.shape}")
        if self.unit_cost.shape != (self.curves.shape[0],):
            raise ValueError("unit_cost needs one entry per configuration")
        if not np.all(np.isfinite(self.curves)):
            raise ValueError("curves must be finite")
        if not self.objective_names:
            names = tuple(f"y{j}" for j in range(self.n_objectives))
            object.__setattr__(self, "objective_names", names)

    @property
    def n_configs(self) -> int:
        return self.curves.shape[0]

    @property
    def max_budget(self) -> int:
        return self.curves.shape[1]

    @property
    def n_objectives(self) -> int:
        return self.curves.shape[2]

    def search_space(self) -> SearchSpace:
        if self.n_configs == 1:
            return SearchSpace((Dimension("index", "categorical", (0,)),))
        return SearchSpace((Dimension("index", "integer", (0, self.n_configs - 1)),))

    def lookup(self, index: int, budget: float) -> tuple[float, ...]:
        _check_budget(budget, self.max_budget)
        if budget != int(budget):
            raise ValueError(f"tabular budgets are integers, got {budget}")
        if not 0 <= index < self.n_configs:
            raise LookupError(f"no configuration {index} in a table of {self.n_configs}")
        return tuple(float(v) for v in self.curves[index, int(budget) - 1])

    def evaluate(self, config: Configuration, budget: float) -> tuple[tuple[float, ...], float]:
        index = int(config.params["index"])
        y = self.lookup(index, budget)
        return y, float(budget * self.unit_cost[index])

    def true_front(self) -> FrontApproximation:
        final = self.curves[:, -1, :]
        mask = pareto_front_mask(final)
        ref = final.max(axis=0)
        return FrontApproximation(final[mask], ref, [int(i) for i in np.flatnonzero(mask)])

    def to_dict(self) -> dict:
        return {
            "format": TABULAR_FORMAT,
            "max_budget": self.max_budget,
            "objective_names": list(self.objective_names),
            "configs": [
                {
                    "index": i,
                    "unit_cost": float(self.unit_cost[i]),
                    "curves": self.curves[i].T.tolist(),
                }
                for i in range(self.n_configs)
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> TabularBenchmark:
        if data.get("format") != TABULAR_FORMAT:
            raise ValueError(f"not a {TABULAR_FORMAT} document")
        configs = sorted(data["configs"], key=lambda c: c["index"])
        if [c["index"] for c in configs] != list(range(len(configs))):
            raise ValueError("configuration indices must be 0..N-1")
        curves = np.array([np.asarray(c["curves"], dtype=float).T for c in configs])
        if curves.shape[1] != data["max_budget"]:
            raise ValueError("every curve must cover budgets 1..max_budget")
        unit = np.array([c["unit_cost"] for c in configs], dtype=float)
        return cls(curves, unit, tuple(data.get("objective_names", ())))

    @classmethod
    def load(cls, path: str | Path) -> TabularBenchmark:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def generate_tabular(
    n_configs: int,
    seed: int,
    n_objectives: int = 2,
    max_budget: int = 200,
    noise: float = 0.0,
) -> TabularBenchmark:
    """Random learning-curve table with ``n_objectives - 1`` error curves and one cost column.

    Each error curve is ``e_inf + (e_0 - e_inf) * exp(-rate * r)``. A latent
    capacity per configuration lowers ``e_inf`` and raises the cost, so
    accurate configurations tend to be slow. ``noise`` adds Gaussian jitter
    to the error curves (then they are no longer monotone).
    """
    if n_configs < 2:
        raise ValueError("need at least 2 configurations")
    if n_objectives < 2:
        raise ValueError("need at least 2 objectives")
    rng = np.random.default_rng(seed)
    capacity = rng.uniform(0.0, 1.0, n_configs)
    cost = np.exp(np.log(0.5) + 3.5 * capacity + rng.normal(0.0, 0.25, n_configs))
    r = np.arange(1, max_budget + 1, dtype=float)
    curves = np.empty((n_configs, max_budget, n_objectives))
    for j in range(n_objectives - 1):
        e_inf = np.clip(0.05 + 0.45 * (1 - capacity) ** 1.5 + rng.normal(0.0, 0.03, n_configs), 0.01, None)
        e_0 = e_inf + rng.uniform(0.3, 0.6, n_configs)
        rate = np.exp(rng.uniform(np.log(0.02), np.log(0.5), n_configs))
        curves[:, :, j] = e_inf[:, None] + (e_0 - e_inf)[:, None] * np.exp(-rate[:, None] * r[None, :])
        if noise > 0:
            curves[:, :, j] += rng.normal(0.0, noise, (n_configs, max_budget))
    curves[:, :, -1] = cost[:, None]
    unit_cost = rng.uniform(*UNIT_COST_RANGE, n_configs)
    names = tuple(f"error{j}" for j in range(n_objectives - 1)) + ("cost",)
    if n_objectives == 2:
        names = ("error", "cost")
    return TabularBenchmark(curves, unit_cost, names)


@dataclass(frozen=True)
class AnalyticBenchmark:
    kind: str = "concave"
    dim: int = 5
    sigma: float = 0.1
    max_budget: float = 81
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("concave", "convex"):
            raise ValueError(f"kind must be 'concave' or 'convex', got {self.kind!r}")
        if self.dim < 2:
            raise ValueError("need at least 2 input dimensions")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    n_objectives = 2
    objective_names = ("y0", "y1")

    def search_space(self) -> SearchSpace:
        return SearchSpace(tuple(Dimension(f"x{i}", "real", (0.0, 1.0)) for i in range(self.dim)))

    def front_curve(self, y1: np.ndarray | float) -> np.ndarray | float:
        """Second objective on the exact front as a function of the first."""
        if self.kind == "concave":
            return 1.0 - np.square(y1)
        return 1.0 - np.sqrt(y1)

    def noiseless(self, x: np.ndarray) -> tuple[float, float]:
        x = np.asarray(x, dtype=float)
        g = 1.0 + 9.0 * float(np.mean(x[1:]))
        ratio = x[0] / g
        h = 1.0 - (ratio**2 if self.kind == "concave" else math.sqrt(ratio))
        return float(x[0]), float(g * h)

    def _rng(self, config: Configuration, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, config.seed], spawn_key=key))

    def unit_cost(self, config: Configuration) -> float:
        return float(self._rng(config, 0).uniform(*UNIT_COST_RANGE))

    def evaluate(self, config: Configuration, budget: float) -> tuple[tuple[float, ...], float]:
        _check_budget(budget, self.max_budget)
        x = np.array([config.params[f"x{i}"] for i in range(self.dim)])
        y = np.array(self.noiseless(x))
        if self.sigma > 0:
            # low fidelity is pessimistic: noise only pushes objectives up
            eps = np.abs(self._rng(config, 1, int(round(budget * 1_000_000))).normal(size=2))
            y = y + self.sigma * eps / math.sqrt(budget)
        return (float(y[0]), float(y[1])), float(budget * self.unit_cost(config))

    def true_front(self, samples: int = 1001) -> FrontApproximation:
        y1 = np.linspace(0.0, 1.0, samples)
        pts = np.column_stack([y1, self.front_curve(y1)])
        return FrontApproximation(pts, np.array([1.0, 1.0]))
