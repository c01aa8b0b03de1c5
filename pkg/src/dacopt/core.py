"""Core solution types, metered evaluation, and seeded random streams.

Solutions are plain float64 vectors. A full solution covers every decision
variable; a partial solution covers an arbitrary subset, remembered by index.
Composing disjoint partials back into a full vector and projecting a full
vector onto an index set are exact, loss-free operations: round-tripping a
vector through project/compose reproduces it bit for bit.

Indices are 0-based everywhere.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    BudgetExhaustedError,
    IndexOutOfRangeError,
    NonFiniteValueError,
    OverlapOrGapError,
)

Objective = Callable[[np.ndarray], float]


class Direction(Enum):
    """Whether smaller or larger objective values win."""

    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


def _readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


def _label_key(label: str) -> int:
    # stable across processes and platforms, unlike hash()
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class RngStream:
    """Deterministic random stream addressed by (base_seed, label, index).

    All randomness in the package flows through streams of this type, backed
    by the counter-based Philox generator. Two streams with the same address
    produce identical draws in any process; streams with different addresses
    are statistically independent, so sibling runs never share state.
    """

    base_seed: int
    label: str = "root"
    index: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = [self.base_seed & 0xFFFFFFFFFFFFFFFF, _label_key(self.label), self.index]
        self._gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))

    @classmethod
    def from_parts(cls, base_seed: int, label: str = "root", index: int = 0) -> "RngStream":
        return cls(base_seed=base_seed, label=label, index=index)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


# ---------------------------------------------------------------------------
# problem description
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Search space: dimension, box bounds, and optimization direction."""

    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    direction: Direction = Direction.MINIMIZE

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        lo = _readonly(np.broadcast_to(self.lower, (self.dimension,)))
        hi = _readonly(np.broadcast_to(self.upper, (self.dimension,)))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("bounds must be finite")
        if not (lo < hi).all():
            raise ValueError("every lower bound must be strictly below its upper bound")

    @classmethod
    def box(cls, dimension: int, low: float = -100.0, high: float = 100.0,
            direction: Direction = Direction.MINIMIZE) -> "ProblemSpec":
        return cls(dimension, np.full(dimension, low), np.full(dimension, high), direction)

    def sample_uniform(self, rng: RngStream) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, self.dimension)

    def clip(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lower, self.upper)


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FullSolution:
    """A complete assignment of all decision variables.

    ``values`` is stored read-only: any modification requires building a new
    solution, which is what guarantees a stale ``cached_value`` can never be
    observed. ``cached_value``, when set, must equal the objective at
    ``values``; ``counted_eval`` fills it in after a fresh evaluation.
    """

    values: np.ndarray
    cached_value: float | None = None

    def __post_init__(self):
        self.values = _readonly(self.values)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class PartialSolution:
    """Values for a subset of variables, tagged with their indices."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.intp, copy=True).reshape(-1)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", _readonly(self.values))
        if idx.shape[0] != self.values.shape[0]:
            raise ValueError(
                f"{idx.shape[0]} indices but {self.values.shape[0]} values")
        if idx.shape[0] and np.unique(idx).shape[0] != idx.shape[0]:
            raise ValueError("indices must be unique")
        if idx.shape[0] and idx.min() < 0:
            raise IndexOutOfRangeError(f"negative index {idx.min()}")

    def __len__(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True, eq=False)
class Grouping:
    """A partition of {0, .., dimension-1} into disjoint index groups."""

    dimension: int
    groups: tuple

    def __post_init__(self):
        groups = tuple(
            np.asarray(np.sort(np.asarray(g, dtype=np.intp).reshape(-1)))
            for g in self.groups
        )
        for g in groups:
            g.setflags(write=False)
        object.__setattr__(self, "groups", groups)
        sizes = sum(g.shape[0] for g in groups)
        if sizes != self.dimension:
            raise OverlapOrGapError(
                f"groups hold {sizes} indices, expected {self.dimension}")
        merged = np.concatenate(groups) if groups else np.empty(0, dtype=np.intp)
        seen = np.zeros(self.dimension, dtype=bool)
        if merged.size and (merged.min() < 0 or merged.max() >= self.dimension):
            raise IndexOutOfRangeError("group index outside [0, dimension)")
        seen[merged] = True
        if not seen.all():
            raise OverlapOrGapError("groups overlap or leave variables uncovered")

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def complement(self, i: int) -> np.ndarray:
        """Indices not in group i, ascending."""
        mask = np.ones(self.dimension, dtype=bool)
        mask[self.groups[i]] = False
        return np.nonzero(mask)[0]


# ---------------------------------------------------------------------------
# composition algebra
# ---------------------------------------------------------------------------


def project(x: FullSolution, indices) -> PartialSolution:
    """Restrict a full solution to the given index subset."""
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= x.dimension):
        raise IndexOutOfRangeError(
            f"indices must lie in [0, {x.dimension}), got extremes "
            f"{idx.min()}..{idx.max()}")
    return PartialSolution(idx, x.values[idx])


def compose(a: PartialSolution, b: PartialSolution) -> FullSolution:
    """Merge two disjoint partials that jointly cover every variable.

    Placement is by index, not argument order, and the result never carries
    a cached objective value.
    """
    return compose_all((a, b))


def compose_all(parts: Iterable[PartialSolution]) -> FullSolution:
    parts = tuple(parts)
    total = sum(len(p) for p in parts)
    filled = np.zeros(total, dtype=bool)
    out = np.empty(total, dtype=np.float64)
    for p in parts:
        idx = p.indices
        if idx.size and idx.max() >= total:
            raise OverlapOrGapError(
                f"index {idx.max()} outside composed dimension {total}")
        if filled[idx].any():
            raise OverlapOrGapError("partial solutions overlap")
        filled[idx] = True
        out[idx] = p.values
    if not filled.all():
        raise OverlapOrGapError("partial solutions leave variables uncovered")
    return FullSolution(out)


# ---------------------------------------------------------------------------
# metered evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalCounter:
    """Budget meter. Every fresh objective call charges exactly one unit."""

    budget: int
    consumed: int = 0

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")
        if not 0 <= self.consumed <= self.budget:
            raise ValueError("consumed must start within [0, budget]")

    @property
    def remaining(self) -> int:
        return self.budget - self.consumed

    def charge(self) -> None:
        if self.consumed >= self.budget:
            raise BudgetExhaustedError(
                f"budget of {self.budget} evaluations exhausted")
        self.consumed += 1


def eval_raw(f: Objective, values: np.ndarray, counter: EvalCounter) -> float:
    """Charge the counter, evaluate, and reject NaN results."""
    counter.charge()
    v = float(f(values))
    if math.isnan(v):
        raise NonFiniteValueError("objective returned NaN")
    return v


def counted_eval(f: Objective, x: FullSolution, counter: EvalCounter) -> float:
    """Objective value of ``x``, free on cache hit, metered otherwise."""
    if x.cached_value is not None:
        return x.cached_value
    v = eval_raw(f, x.values, counter)
    x.cached_value = v
    return v


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


def better(a: float, b: float, direction: Direction = Direction.MINIMIZE) -> bool:
    """True when candidate ``a`` beats incumbent ``b``; ties go to ``a``.

    The tie rule makes selection accept equal-valued challengers, which keeps
    plateau drift possible. NaN on either side is a hard error.
    """
    if math.isnan(a) or math.isnan(b):
        raise NonFiniteValueError("cannot rank NaN objective values")
    if direction is Direction.MINIMIZE:
        return a <= b
    return a >= b


def strictly_better(a: float, b: float, direction: Direction = Direction.MINIMIZE) -> bool:
    """True when ``a`` beats ``b`` with ties excluded (used for argmin scans)."""
    if math.isnan(a) or math.isnan(b):
        raise NonFiniteValueError("cannot rank NaN objective values")
    if direction is Direction.MINIMIZE:
        return a < b
    return a > b


# ---------------------------------------------------------------------------
# convergence traces
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceTrace:
    """Best-so-far objective value sampled against evaluations consumed."""

    fes: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def record(self, fe: int, value: float) -> None:
        self.fes.append(int(fe))
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.fes)

    @property
    def final_fe(self) -> int:
        return self.fes[-1]

    @property
    def final_value(self) -> float:
        return self.values[-1]

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.fes, dtype=np.int64), np.asarray(self.values)
