"""Random-weight scalarizations (RW, ParEGO, Golovin) and the min-over-weights score.

Every score here is oriented so that lower is better.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from moasha.core import config_seed
from moasha.metrics import normalize_pool
from moasha.pareto import Candidate

DEFAULT_RHO = 0.05
DEFAULT_WEIGHTS = 100


class ScalarizationKind(enum.Enum):
    RW = "rw"
    PAREGO = "parego"
    GOLOVIN = "golovin"


@dataclass(frozen=True)
class WeightSet:
    vectors: np.ndarray  # shape (m, n), rows on the simplex
    owner: int = -1

    def __len__(self) -> int:
        return len(self.vectors)


def sample_weight_set(n: int, m: int, seed: int, owner: int = -1) -> WeightSet:
    """Draw ``m`` weight vectors uniformly from the ``n``-simplex.

    Normalized standard exponentials give a Dirichlet(1, ..., 1) sample. Rows
    containing an exact zero are redrawn so the Golovin form never divides by 0.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 objectives, got {n}")
    if m < 1:
        raise ValueError(f"need m >= 1 weight vectors, got {m}")
    rng = np.random.default_rng(seed)
    draws = rng.standard_exponential((m, n))
    bad = np.any(draws == 0.0, axis=1)
    while bad.any():
        draws[bad] = rng.standard_exponential((int(bad.sum()), n))
        bad = np.any(draws == 0.0, axis=1)
    w = draws / draws.sum(axis=1, keepdims=True)
    w.flags.writeable = False
    return WeightSet(w, owner)


def _scores(kind: ScalarizationKind, y: np.ndarray, w: np.ndarray, rho: float) -> np.ndarray:
    # y: (..., n), w: (..., n) broadcastable; returns (...)
    if kind is ScalarizationKind.RW:
        return np.sum(y * w, axis=-1)
    if kind is ScalarizationKind.PAREGO:
        return np.max(w * y, axis=-1) + rho * np.sum(y * w, axis=-1)
    if kind is ScalarizationKind.GOLOVIN:
        n = y.shape[-1]
        flipped = 1.0 - y  # y is quantile-normalized; this turns it into a gain
        return -np.min(np.maximum(0.0, flipped / w), axis=-1) ** n
    raise ValueError(f"unknown scalarization {kind!r}")


def scalarize(
    kind: ScalarizationKind,
    y: Sequence[float],
    w: Sequence[float],
    rho: float = DEFAULT_RHO,
) -> float:
    """Scalarize one objective vector with one weight vector.

    For Golovin, ``y`` must already be quantile-normalized into [0, 1].
    """
    y_arr = np.asarray(y, dtype=float)
    w_arr = np.asarray(w, dtype=float)
    if y_arr.shape != w_arr.shape:
        raise ValueError(f"dimension mismatch: {y_arr.shape} vs {w_arr.shape}")
    if kind is ScalarizationKind.PAREGO and rho <= 0:
        raise ValueError("ParEGO needs rho > 0")
    return float(_scores(kind, y_arr, w_arr, rho))


def e_v_score(
    weights: WeightSet, y: Sequence[float], kind: ScalarizationKind, rho: float = DEFAULT_RHO
) -> float:
    """Minimum scalarization of ``y`` over a configuration's weight set."""
    y_arr = np.asarray(y, dtype=float)
    return float(np.min(_scores(kind, y_arr[None, :], weights.vectors, rho)))


class ScalarizedSelector:
    """Rank a rung by each configuration's min-over-weights scalarization.

    Weight sets are created lazily per configuration from the experiment seed
    and the config id, so scores are reproducible. RW and ParEGO score raw
    objectives unless ``normalize`` is set; Golovin always scores the rung's
    quantile-normalized objectives.
    """

    def __init__(
        self,
        kind: ScalarizationKind | str,
        n_weights: int = DEFAULT_WEIGHTS,
        experiment_seed: int = 0,
        rho: float = DEFAULT_RHO,
        normalize: bool = False,
    ) -> None:
        self.kind = ScalarizationKind(kind)
        if self.kind is ScalarizationKind.PAREGO and rho <= 0:
            raise ValueError("ParEGO needs rho > 0")
        if n_weights < 1:
            raise ValueError("n_weights must be >= 1")
        self.n_weights = n_weights
        self.experiment_seed = experiment_seed
        self.rho = rho
        self.normalize = normalize or self.kind is ScalarizationKind.GOLOVIN
        self._weights: dict[int, WeightSet] = {}
        self._raw_scores: dict[tuple[int, tuple[float, ...]], float] = {}

    def weight_set(self, config_id: int, n: int) -> WeightSet:
        ws = self._weights.get(config_id)
        if ws is None:
            seed = config_seed(self.experiment_seed, config_id)
            ws = sample_weight_set(n, self.n_weights, seed, owner=config_id)
            self._weights[config_id] = ws
        return ws

    def score(self, config_id: int, y: Sequence[float]) -> float:
        return e_v_score(self.weight_set(config_id, len(y)), y, self.kind, self.rho)

    def scores(self, pool: Sequence[Candidate]) -> np.ndarray:
        if self.normalize:
            y = normalize_pool([c.objectives for c in pool])
            w = np.stack([self.weight_set(c.config_id, y.shape[1]).vectors for c in pool])
            return _scores(self.kind, y[:, None, :], w, self.rho).min(axis=1)
        out = np.empty(len(pool))
        for i, c in enumerate(pool):
            key = (c.config_id, c.objectives)
            s = self._raw_scores.get(key)
            if s is None:
                s = self._raw_scores[key] = self.score(c.config_id, c.objectives)
            out[i] = s
        return out

    def __call__(
        self, pool: Sequence[Candidate], count: int | None = None, *, limit: int | None = None
    ) -> list[int]:
        if not pool:
            return []
        ids = np.array([c.config_id for c in pool], dtype=np.int64)
        order = np.lexsort((ids, self.scores(pool)))
        ranking = [int(i) for i in ids[order]]
        return ranking if limit is None else ranking[:limit]


def selector_scalarized(
    pool: Sequence[Candidate],
    count: int | None,
    kind: ScalarizationKind | str,
    **kwargs,
) -> list[int]:
    return ScalarizedSelector(kind, **kwargs)(pool, count)
