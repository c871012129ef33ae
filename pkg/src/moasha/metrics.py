"""Empirical-CDF normalization, reference fronts and anytime hypervolume series."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from moasha.core import EvaluationLog
from moasha.pareto import hypervolume, pareto_front_mask


def normalize_ecdf(pool: Sequence[float], y: float | np.ndarray) -> float | np.ndarray:
    """Fraction of ``pool`` values that are <= ``y``.

    Works elementwise when ``y`` is an array.
    """
    values = np.sort(np.asarray(pool, dtype=float))
    if values.size == 0:
        raise ValueError("empirical CDF needs a non-empty pool")
    ranks = np.searchsorted(values, y, side="right") / values.size
    return float(ranks) if np.ndim(ranks) == 0 else ranks


class EcdfNormalizer:
    """Per-objective quantile normalization against a fixed pool of observations."""

    def __init__(self, pool: Sequence[Sequence[float]]) -> None:
        data = np.asarray(pool, dtype=float)
        if data.ndim != 2 or len(data) == 0:
            raise ValueError("empirical CDF needs a non-empty 2-d pool")
        self._sorted = np.sort(data, axis=0)

    @property
    def n_objectives(self) -> int:
        return self._sorted.shape[1]

    def __call__(self, y: Sequence[Sequence[float]] | Sequence[float]) -> np.ndarray:
        arr = np.asarray(y, dtype=float)
        flat = arr.reshape(-1, self.n_objectives)
        out = np.empty_like(flat)
        for j in range(self.n_objectives):
            out[:, j] = np.searchsorted(self._sorted[:, j], flat[:, j], side="right")
        out /= len(self._sorted)
        return out.reshape(arr.shape)


def normalize_pool(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Normalize points against themselves."""
    return EcdfNormalizer(points)(points)


@dataclass
class FrontApproximation:
    points: np.ndarray  # (k, n), mutually non-dominated
    reference: np.ndarray
    config_ids: list[int] = field(default_factory=list)

    def hypervolume(self) -> float:
        return hypervolume(self.points, self.reference)


def accumulate_reference_front(
    logs: Iterable[EvaluationLog], normalizer: EcdfNormalizer | None = None
) -> FrontApproximation:
    """Non-dominated subset of every evaluation in ``logs``, in normalized space.

    The normalizer defaults to the ECDF of the pooled evaluations themselves;
    the reference point is the all-ones vector.
    """
    records = [r for log in logs for r in log.records()]
    if not records:
        raise ValueError("reference front needs at least one evaluation")
    raw = np.array([r.objectives for r in records])
    normalizer = normalizer or EcdfNormalizer(raw)
    y = normalizer(raw)
    mask = pareto_front_mask(y)
    ids = [r.config_id for r, keep in zip(records, mask) if keep]
    return FrontApproximation(y[mask], np.ones(y.shape[1]), ids)


@dataclass
class MetricSeries:
    t: list[float] = field(default_factory=list)
    hv: list[float] = field(default_factory=list)
    hv_diff: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "hv", "hv_diff"])
        for row in zip(self.t, self.hv, self.hv_diff):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> MetricSeries:
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["t", "hv", "hv_diff"]:
            raise ValueError(f"unexpected metrics header {rows[0]}")
        series = cls()
        for t, hv, diff in rows[1:]:
            series.t.append(float(t))
            series.hv.append(float(hv))
            series.hv_diff.append(float(diff))
        return series


def anytime_hypervolume(
    log: EvaluationLog,
    reference: FrontApproximation,
    normalizer: EcdfNormalizer,
) -> MetricSeries:
    """Hypervolume of the running non-dominated set after each distinct ``t_end``.

    The difference column is measured against ``reference``.
    """
    records = log.records()
    if not records:
        raise ValueError("anytime hypervolume needs a non-empty log")
    y = normalizer(np.array([r.objectives for r in records]))
    ones = np.ones(y.shape[1])
    target = reference.hypervolume()
    series = MetricSeries()
    front = np.empty((0, y.shape[1]))
    hv = 0.0
    changed = False
    for i, rec in enumerate(records):
        p = y[i]
        if not np.any(np.all(front <= p, axis=1)):
            # p is not weakly dominated: it joins, evicting what it dominates
            front = np.vstack([front[~np.all(p <= front, axis=1)], p])
            changed = True
        last_at_t = i + 1 == len(records) or records[i + 1].t_end != rec.t_end
        if last_at_t:
            if changed:
                hv = hypervolume(front, ones)
                changed = False
            series.t.append(rec.t_end)
            series.hv.append(hv)
            series.hv_diff.append(target - hv)
    return series
