"""Dominance, non-dominated sorting, hypervolume and geometry-aware selectors.

Every function assumes minimization. Candidates are ``(config_id, objectives)``
pairs; selectors return config ids best-first.
"""

from __future__ import annotations

import enum
import math
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist

MAX_EXACT_DIM = 4


class Dominance(enum.Enum):
    STRICT = "strict"
    WEAK = "weak"
    NONE = "none"


class Candidate(NamedTuple):
    config_id: int
    objectives: tuple[float, ...]


class UnsupportedDimensionError(ValueError):
    pass


def dominates(a: Sequence[float], b: Sequence[float]) -> Dominance:
    """Relation of ``a`` to ``b``: STRICT if a is no worse everywhere and better somewhere,
    WEAK if a equals b, NONE otherwise."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    better = False
    for x, y in zip(a, b):
        if x > y:
            return Dominance.NONE
        if x < y:
            better = True
    return Dominance.STRICT if better else Dominance.WEAK


def _iter_fronts_2d(y: np.ndarray) -> Iterator[np.ndarray]:
    # np.unique sorts rows lexicographically; among distinct rows, a later row
    # is dominated iff some earlier row has a second objective <= its own.
    uniq, inverse = np.unique(y, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    members = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[members], np.arange(len(uniq) + 1))
    remaining = np.arange(len(uniq))
    while remaining.size:
        col = uniq[remaining, 1]
        prev_min = np.minimum.accumulate(np.concatenate(([np.inf], col[:-1])))
        first = col < prev_min
        picked = remaining[first]
        yield np.sort(np.concatenate([members[bounds[u] : bounds[u + 1]] for u in picked]))
        remaining = remaining[~first]


def _iter_fronts_nd(y: np.ndarray) -> Iterator[np.ndarray]:
    le = np.all(y[:, None, :] <= y[None, :, :], axis=2)
    lt = np.any(y[:, None, :] < y[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i strictly dominates j
    count = dom.sum(axis=0)
    done = np.zeros(len(y), dtype=bool)
    current = np.flatnonzero(count == 0)
    while current.size:
        yield current
        done[current] = True
        count = count - dom[current].sum(axis=0)
        current = np.flatnonzero((count == 0) & ~done)


def iter_fronts(points: Sequence[Sequence[float]]) -> Iterator[np.ndarray]:
    """Lazily yield Pareto fronts F1, F2, ... as sorted index arrays into ``points``."""
    y = np.asarray(points, dtype=float)
    if y.size == 0:
        return iter(())
    if y.ndim != 2:
        raise ValueError(f"expected 2-d points, got shape {y.shape}")
    if y.shape[1] == 2:
        return _iter_fronts_2d(y)
    return _iter_fronts_nd(y)


def non_dom_sorting(points: Sequence[Sequence[float]]) -> list[list[int]]:
    """Peel Pareto fronts off ``points``.

    Returns:
        Fronts F1..Fm as lists of indices into ``points``, each ascending.
    """
    return [[int(i) for i in front] for front in iter_fronts(points)]


def front_ranks(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Front index (0-based) of each point."""
    ranks = np.full(len(points), -1, dtype=np.int64)
    for level, front in enumerate(iter_fronts(points)):
        ranks[front] = level
    return ranks


def pareto_front_mask(points: Sequence[Sequence[float]]) -> np.ndarray:
    mask = np.zeros(len(points), dtype=bool)
    if len(points):
        mask[next(iter_fronts(points))] = True
    return mask


def _hv2d(y: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((y[:, 1], y[:, 0]))
    area = 0.0
    ceiling = ref[1]
    for p1, p2 in y[order]:
        if p2 < ceiling:
            area += (ref[0] - p1) * (ceiling - p2)
            ceiling = p2
    return area


def _hv_sweep(y: np.ndarray, ref: np.ndarray) -> float:
    n = y.shape[1]
    if len(y) == 0:
        return 0.0
    if n == 1:
        return float(ref[0] - y[:, 0].min())
    if n == 2:
        return _hv2d(y, ref)
    # slice along the last objective into slabs, each an (n-1)-dimensional problem
    y = y[np.argsort(y[:, -1], kind="stable")]
    levels = np.append(y[:, -1], ref[-1])
    volume = 0.0
    for i in range(len(y)):
        height = levels[i + 1] - levels[i]
        if height > 0:
            volume += height * _hv_sweep(y[: i + 1, :-1], ref[:-1])
    return volume


def hypervolume(points: Sequence[Sequence[float]], reference: Sequence[float]) -> float:
    """Exact dominated hypervolume for 2 to 4 objectives.

    Points that do not strictly dominate the reference in every coordinate
    contribute nothing.

    Raises:
        UnsupportedDimensionError: more than four objectives; use
            :func:`hypervolume_mc` instead.
    """
    ref = np.asarray(reference, dtype=float)
    y = np.asarray(points, dtype=float).reshape(-1, ref.size)
    n = ref.size
    if n > MAX_EXACT_DIM:
        raise UnsupportedDimensionError(
            f"exact hypervolume supports at most {MAX_EXACT_DIM} objectives, got {n}; "
            "use hypervolume_mc"
        )
    y = y[np.all(y < ref, axis=1)]
    if len(y) == 0:
        return 0.0
    y = y[pareto_front_mask(y)]
    return float(_hv_sweep(y, ref))


def hypervolume_mc(
    points: Sequence[Sequence[float]],
    reference: Sequence[float],
    sample_count: int,
    rng: np.random.Generator,
    chunk: int = 100_000,
) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate by uniform sampling of the bounding box.

    Returns:
        ``(estimate, standard_error)``.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    ref = np.asarray(reference, dtype=float)
    y = np.asarray(points, dtype=float).reshape(-1, ref.size)
    y = y[np.all(y < ref, axis=1)]
    if len(y) == 0:
        return 0.0, 0.0
    lower = y.min(axis=0)
    box = float(np.prod(ref - lower))
    if box <= 0:
        return 0.0, 0.0
    hits = 0
    remaining = sample_count
    while remaining:
        k = min(chunk, remaining)
        x = rng.uniform(lower, ref, size=(k, ref.size))
        covered = np.zeros(k, dtype=bool)
        for p in y:
            covered |= np.all(p <= x, axis=1)
        hits += int(covered.sum())
        remaining -= k
    frac = hits / sample_count
    return box * frac, box * math.sqrt(frac * (1 - frac) / sample_count)


def crowding_distance(front: Sequence[Sequence[float]]) -> np.ndarray:
    """NSGA-II crowding distance of each point in a mutually non-dominated front."""
    y = np.asarray(front, dtype=float)
    size = len(y)
    if size <= 2:
        return np.full(size, math.inf)
    dist = np.zeros(size)
    for j in range(y.shape[1]):
        order = np.argsort(y[:, j], kind="stable")
        col = y[order, j]
        span = col[-1] - col[0]
        if span == 0:
            continue  # a constant objective carries no spacing information
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def _split(pool: Sequence[Candidate]) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([c.config_id for c in pool], dtype=np.int64)
    y = np.array([c.objectives for c in pool], dtype=float)
    return ids, y


def selector_nsga_ii(
    pool: Sequence[Candidate], count: int | None = None, *, limit: int | None = None
) -> list[int]:
    """Rank by front, then by crowding distance (descending), then by config id.

    The full ranking is returned (callers take the first ``count``) unless
    ``limit`` is given, in which case computation stops once that many ids
    are ranked; the result is then a prefix of the full ranking.
    """
    if not pool:
        return []
    limit = len(pool) if limit is None else limit
    ids, y = _split(pool)
    ranking: list[int] = []
    for idx in iter_fronts(y):
        if len(ranking) >= limit:
            break
        cd = crowding_distance(y[idx])
        order = np.lexsort((ids[idx], -cd))
        ranking.extend(int(i) for i in ids[idx[order]])
    return ranking[:limit]


def selector_eps_net(
    pool: Sequence[Candidate], count: int | None = None, *, limit: int | None = None
) -> list[int]:
    """Rank fronts in order, each by farthest-point sampling in objective space.

    The ranking is seeded with the earliest member of the first front in
    pool order, so a pool listed by completion time seeds with the first
    completion. Within a front, the next pick maximizes its minimum Euclidean
    distance to everything already ranked; ties go to the smaller config id.
    ``limit`` behaves as in :func:`selector_nsga_ii`.
    """
    if not pool:
        return []
    limit = len(pool) if limit is None else limit
    ids, y = _split(pool)
    ranking: list[int] = []
    ranked_rows: list[int] = []
    for level, front in enumerate(iter_fronts(y)):
        if len(ranking) >= limit:
            break
        if level == 0:
            ranking.append(int(ids[front[0]]))
            ranked_rows.append(int(front[0]))
            front = front[1:]
            if not front.size:
                continue
        idx = front[np.argsort(ids[front], kind="stable")]
        pts = y[idx]
        # distance of each front member to the nearest already-ranked point
        nearest = cdist(pts, y[ranked_rows]).min(axis=1).tolist()
        within = cdist(pts, pts).tolist()
        remaining = list(range(len(idx)))
        while remaining and len(ranking) < limit:
            pick = max(remaining, key=nearest.__getitem__)  # first max = smallest id
            remaining.remove(pick)
            ranking.append(int(ids[idx[pick]]))
            ranked_rows.append(int(idx[pick]))
            row = within[pick]
            for j in remaining:
                if row[j] < nearest[j]:
                    nearest[j] = row[j]
    return ranking[:limit]
