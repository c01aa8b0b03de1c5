"""Shifted, permuted benchmark functions with block structure.

Each benchmark instance applies ``z = x - o`` for a random interior shift
``o``, gathers ``z`` in the order of a random permutation, and feeds
contiguous blocks of the gathered vector to one of three base functions:

* ``sphere``        sum of squares, fully separable
* ``schwefel12``    squared prefix sums, every variable interacts
* ``rosenbrock``    chained valley, adjacent variables interact

The five composite functions cover the spectrum between a single
interacting block (F1) and a fully interacting vector (F4). All instances
are minimization problems with a certified optimum: exactly 0 at ``x = o``
for the schwefel/sphere composites, and at ``x = o + 1`` for the
rosenbrock composite (where float subtraction leaves a tiny residual).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import Direction, ProblemSpec, RngStream
from .errors import (
    DimensionMismatchError,
    DimensionTooSmallError,
    IncompatibleDimensionsError,
    NonFiniteValueError,
)

DEFAULT_LOWER = -100.0
DEFAULT_UPPER = 100.0
DEFAULT_SHIFT_LOW = -80.0
DEFAULT_SHIFT_HIGH = 80.0


class FunctionId(Enum):
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    F4 = "f4"
    F5 = "f5"
    SPHERE = "sphere"
    SCHWEFEL12 = "schwefel12"
    ROSENBROCK = "rosenbrock"

    @classmethod
    def parse(cls, name: str) -> "FunctionId":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown function {name!r}; expected one of {valid}")


def _check_vector(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size == 0:
        raise DimensionTooSmallError("objective input must be non-empty")
    if not np.isfinite(z).all():
        raise NonFiniteValueError("objective input contains non-finite entries")
    return z


def sphere(z) -> float:
    """Sum of squared coordinates."""
    z = _check_vector(z)
    return float(z @ z)


def schwefel12(z) -> float:
    """Sum of squared prefix sums, computed in O(len(z))."""
    z = _check_vector(z)
    s = np.cumsum(z)
    return float(s @ s)


def rosenbrock(z) -> float:
    """Chained quadratic valley with minimum 0 at the all-ones vector."""
    z = _check_vector(z)
    if z.size < 2:
        raise DimensionTooSmallError(
            f"rosenbrock needs at least 2 coordinates, got {z.size}")
    head, tail = z[:-1], z[1:]
    return float(np.sum(100.0 * (head * head - tail) ** 2 + (head - 1.0) ** 2))


# block kinds used by the composite evaluator
_SCH = "sch"
_SPH = "sph"
_ROS = "ros"


def _block_plan(fid: FunctionId, dim: int, group: int) -> list:
    """Return (kind, start, stop, block_count) segments over the gathered z.

    Raises IncompatibleDimensionsError when the blocks cannot tile ``dim``.
    """
    if group < 1:
        raise IncompatibleDimensionsError(f"group size must be >= 1, got {group}")

    def need(cond: bool, why: str):
        if not cond:
            raise IncompatibleDimensionsError(
                f"{fid.value}: dimension {dim} with group size {group} invalid ({why})")

    if fid is FunctionId.F1:
        need(dim >= group, "needs dimension >= group size")
        plan = [(_SCH, 0, group, 1)]
        if dim > group:
            plan.append((_SPH, group, dim, 1))
        return plan
    if fid is FunctionId.F2:
        half = dim // 2
        need(dim % 2 == 0, "needs even dimension")
        need(half % group == 0, "needs half the dimension divisible by group size")
        return [(_SCH, 0, half, half // group), (_SPH, half, dim, 1)]
    if fid is FunctionId.F3:
        need(dim % group == 0, "needs dimension divisible by group size")
        return [(_SCH, 0, dim, dim // group)]
    if fid is FunctionId.F4:
        return [(_SCH, 0, dim, 1)]
    if fid is FunctionId.F5:
        need(dim % group == 0, "needs dimension divisible by group size")
        need(group >= 2, "rosenbrock blocks need >= 2 coordinates")
        return [(_ROS, 0, dim, dim // group)]
    if fid is FunctionId.SPHERE:
        return [(_SPH, 0, dim, 1)]
    if fid is FunctionId.SCHWEFEL12:
        return [(_SCH, 0, dim, 1)]
    if fid is FunctionId.ROSENBROCK:
        need(dim >= 2, "rosenbrock needs >= 2 coordinates")
        return [(_ROS, 0, dim, 1)]
    raise ValueError(f"unhandled function id {fid}")


def _uses_shifted_ones_optimum(fid: FunctionId) -> bool:
    return fid in (FunctionId.F5, FunctionId.ROSENBROCK)


@dataclass(eq=False)
class BenchmarkInstance:
    """One concrete shifted/permuted benchmark problem.

    Immutable after construction and safe to share across runs. Calling the
    instance evaluates it: ``value = inst(x)``.
    """

    function_id: FunctionId
    dimension: int
    group_size: int
    shift: np.ndarray
    permutation: np.ndarray
    instance_seed: int = 0
    lower: float = DEFAULT_LOWER
    upper: float = DEFAULT_UPPER
    # derived, set in __post_init__
    _plan: list = field(init=False, repr=False)
    _shift_gathered: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        shift = np.array(self.shift, dtype=np.float64, copy=True).reshape(-1)
        perm = np.array(self.permutation, dtype=np.intp, copy=True).reshape(-1)
        if shift.shape[0] != self.dimension or perm.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"shift/permutation length must equal dimension {self.dimension}")
        check = np.zeros(self.dimension, dtype=bool)
        check[perm] = True
        if not check.all():
            raise ValueError("permutation must rearrange 0..dimension-1")
        shift.setflags(write=False)
        perm.setflags(write=False)
        self.shift = shift
        self.permutation = perm
        self._plan = _block_plan(self.function_id, self.dimension, self.group_size)
        gathered = shift[perm].copy()
        gathered.setflags(write=False)
        self._shift_gathered = gathered
        opt = self.optimum()
        if (opt < self.lower).any() or (opt > self.upper).any():
            raise ValueError("certified optimum falls outside the box bounds")

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"expected shape ({self.dimension},), got {x.shape}")
        zp = x[self.permutation] - self._shift_gathered
        total = 0.0
        for kind, start, stop, blocks in self._plan:
            seg = zp[start:stop]
            if kind == _SPH:
                part = float(seg @ seg)
            elif kind == _SCH:
                s = np.cumsum(seg.reshape(blocks, -1), axis=1)
                part = float(np.einsum("ij,ij->", s, s))
                if self.function_id is FunctionId.F1:
                    part *= 1e6
            else:  # _ROS
                r = seg.reshape(blocks, -1)
                head, tail = r[:, :-1], r[:, 1:]
                part = float(np.sum(100.0 * (head * head - tail) ** 2
                                    + (head - 1.0) ** 2))
            total += part
        return total

    __call__ = evaluate

    # -- certified structure -------------------------------------------------

    def optimum(self) -> np.ndarray:
        """The known global optimizer of this instance."""
        if _uses_shifted_ones_optimum(self.function_id):
            return self.shift + 1.0
        return self.shift.copy()

    def problem_spec(self) -> ProblemSpec:
        return ProblemSpec.box(self.dimension, self.lower, self.upper,
                               Direction.MINIMIZE)

    def schwefel_block_indices(self) -> list:
        """Original-coordinate index arrays of the schwefel blocks, in order."""
        out = []
        for kind, start, stop, blocks in self._plan:
            if kind != _SCH:
                continue
            width = (stop - start) // blocks
            for b in range(blocks):
                lo = start + b * width
                out.append(self.permutation[lo:lo + width].copy())
        return out


def make_instance(function_id: FunctionId, dimension: int, group_size: int,
                  instance_seed: int, *,
                  lower: float = DEFAULT_LOWER, upper: float = DEFAULT_UPPER,
                  shift_low: float = DEFAULT_SHIFT_LOW,
                  shift_high: float = DEFAULT_SHIFT_HIGH) -> BenchmarkInstance:
    """Draw the shift and permutation for a reproducible instance.

    The shift is uniform over [shift_low, shift_high], strictly inside the
    box so the optimum is always reachable; rosenbrock-style instances clamp
    it one unit lower because their optimum sits at ``o + 1``.
    """
    if dimension < 1:
        raise IncompatibleDimensionsError(f"dimension must be >= 1, got {dimension}")
    _block_plan(function_id, dimension, group_size)  # fail fast before drawing
    rng = RngStream.from_parts(instance_seed, "benchmark-instance")
    shift = rng.uniform(shift_low, shift_high, dimension)
    if _uses_shifted_ones_optimum(function_id):
        shift = np.minimum(shift, shift_high - 1.0)
    perm = rng.permutation(dimension)
    return BenchmarkInstance(function_id, dimension, group_size, shift, perm,
                             instance_seed=instance_seed, lower=lower, upper=upper)


def evaluate_instance(instance: BenchmarkInstance, x) -> float:
    return instance.evaluate(x)
