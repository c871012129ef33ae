"""Domain types shared by every part of the engine, plus the evaluation log.

All objectives are minimized. Benchmark adapters negate maximization
objectives before they reach anything in here.
"""

from __future__ import annotations

import bisect
import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

KINDS = ("real", "integer", "categorical")
SCALINGS = ("linear", "logarithmic")


class ConfigSpaceError(ValueError):
    """Raised for a malformed search-space dimension."""


class ValidationError(ValueError):
    """Raised when a record violates its invariants."""


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str
    domain: tuple
    scaling: str = "linear"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigSpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.scaling not in SCALINGS:
            raise ConfigSpaceError(f"{self.name}: unknown scaling {self.scaling!r}")
        object.__setattr__(self, "domain", tuple(self.domain))
        if self.kind == "categorical":
            if len(self.domain) == 0:
                raise ConfigSpaceError(f"{self.name}: empty categorical domain")
            return
        if len(self.domain) != 2:
            raise ConfigSpaceError(f"{self.name}: expected (lower, upper), got {self.domain!r}")
        lower, upper = self.domain
        if not lower < upper:
            raise ConfigSpaceError(f"{self.name}: lower bound must be < upper bound")
        if self.scaling == "logarithmic" and lower <= 0:
            raise ConfigSpaceError(f"{self.name}: logarithmic scaling needs positive bounds")

    def contains(self, value: Any) -> bool:
        if self.kind == "categorical":
            return value in self.domain
        lower, upper = self.domain
        if self.kind == "integer" and int(value) != value:
            return False
        return lower <= value <= upper

    def sample(self, rng: np.random.Generator) -> Any:
        if self.kind == "categorical":
            return self.domain[int(rng.integers(len(self.domain)))]
        lower, upper = self.domain
        if self.kind == "integer" and self.scaling == "linear":
            return int(rng.integers(lower, upper + 1))
        if self.scaling == "logarithmic":
            value = math.exp(rng.uniform(math.log(lower), math.log(upper)))
        else:
            value = rng.uniform(lower, upper)
        if self.kind == "integer":
            return int(min(max(round(value), lower), upper))
        # exp/log round-off can step just outside the bounds
        return float(min(max(value, lower), upper))


@dataclass(frozen=True)
class SearchSpace:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ConfigSpaceError("dimension names must be unique")

    def contains(self, params: dict[str, Any]) -> bool:
        if set(params) != {d.name for d in self.dimensions}:
            return False
        return all(d.contains(params[d.name]) for d in self.dimensions)


@dataclass(frozen=True)
class Configuration:
    id: int
    params: dict[str, Any] = field(hash=False)
    seed: int = 0


def config_seed(experiment_seed: int, config_id: int) -> int:
    """64-bit seed for one configuration, stable across runs and platforms."""
    seq = np.random.SeedSequence(entropy=int(experiment_seed), spawn_key=(int(config_id),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def sample_configuration(
    space: SearchSpace,
    rng: np.random.Generator,
    config_id: int = 0,
    experiment_seed: int = 0,
) -> Configuration:
    """Draw each dimension independently and uniformly (on the log scale where declared)."""
    params = {d.name: d.sample(rng) for d in space.dimensions}
    return Configuration(config_id, params, config_seed(experiment_seed, config_id))


def as_objectives(values: Iterable[float]) -> tuple[float, ...]:
    """Validate and freeze an objective vector."""
    out = tuple(float(v) for v in values)
    if len(out) < 2:
        raise ValidationError(f"need at least 2 objectives, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise ValidationError(f"non-finite objective in {out}")
    return out


@dataclass(frozen=True)
class EvaluationRecord:
    config_id: int
    rung: int
    budget: float
    objectives: tuple[float, ...]
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "objectives", as_objectives(self.objectives))
        if self.rung < 0:
            raise ValidationError(f"negative rung {self.rung}")
        if not (self.budget > 0 and math.isfinite(self.budget)):
            raise ValidationError(f"budget must be positive, got {self.budget}")
        if not (0 <= self.t_start <= self.t_end):
            raise ValidationError(f"bad timestamps t_start={self.t_start} t_end={self.t_end}")

    @property
    def sort_key(self) -> tuple[float, int]:
        return (self.t_end, self.config_id)

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips exactly
        return json.dumps(
            {
                "config_id": self.config_id,
                "rung": self.rung,
                "budget": self.budget,
                "objectives": list(self.objectives),
                "t_start": self.t_start,
                "t_end": self.t_end,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> EvaluationRecord:
        d = json.loads(line)
        return cls(
            int(d["config_id"]),
            int(d["rung"]),
            float(d["budget"]),
            tuple(d["objectives"]),
            float(d["t_start"]),
            float(d["t_end"]),
        )


class EvaluationLog:
    """Append-only evaluation log kept sorted by (t_end, config_id).

    Appends are serialized by a lock. Readers get a snapshot copy.
    """

    def __init__(self, records: Iterable[EvaluationRecord] = ()) -> None:
        self._lock = threading.Lock()
        self._records: list[EvaluationRecord] = []
        self._keys: list[tuple[float, int]] = []
        for r in records:
            self.append(r)

    def append(self, record: EvaluationRecord) -> None:
        if not isinstance(record, EvaluationRecord):
            raise ValidationError(f"expected EvaluationRecord, got {type(record).__name__}")
        with self._lock:
            i = bisect.bisect_right(self._keys, record.sort_key)
            self._keys.insert(i, record.sort_key)
            self._records.insert(i, record)

    def records(self) -> list[EvaluationRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[EvaluationRecord]:
        return iter(self.records())

    def __getitem__(self, i: int) -> EvaluationRecord:
        return self._records[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EvaluationLog):
            return NotImplemented
        return self.records() == other.records()

    def objectives(self) -> np.ndarray:
        return np.array([r.objectives for r in self.records()], dtype=float)

    def dumps(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> EvaluationLog:
        return cls(EvaluationRecord.from_json(line) for line in text.splitlines() if line.strip())

    @classmethod
    def load(cls, path: str | Path) -> EvaluationLog:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def append_evaluation(log: EvaluationLog, record: EvaluationRecord) -> None:
    log.append(record)


def objective_matrix(points: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array of objective vectors, got shape {arr.shape}")
    return arr
