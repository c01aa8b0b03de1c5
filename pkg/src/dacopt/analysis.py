"""Ground-truth oracles and diagnostic measurements.

Everything here is desk-scale instrumentation: exhaustive remainder search
on an explicit grid, sampling-based variable-interaction detection, the
product-vs-power probability bound, rank agreement between the cheap and
the exhaustive remainder choices, and log-linear convergence fitting.
Oracle evaluations are deliberately unmetered; they exist to check the
metered machinery, not to compete with it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ConvergenceTrace,
    Direction,
    Objective,
    PartialSolution,
    ProblemSpec,
    RngStream,
    strictly_better,
)
from .errors import (
    GridTooLargeError,
    NonPositiveValuesError,
    OutOfRangeProbabilityError,
)

REL_EQ_TOL = 1e-12  # slack for float comparisons of mathematically equal terms
INTERACTION_MARGIN = 1e-12


@dataclass(eq=False)
class GridSpec:
    """Explicit evaluation grid over a set of variable indices.

    ``points[d]`` lists the admissible values of variable ``indices[d]``.
    The full grid is the cartesian product; its size is capped because the
    exhaustive search walks every point.
    """

    indices: np.ndarray
    points: list
    cap: int = 1_000_000

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp).reshape(-1)
        self.points = [np.asarray(p, dtype=np.float64).reshape(-1)
                       for p in self.points]
        if len(self.points) != self.indices.shape[0]:
            raise ValueError("need one point list per grid dimension")
        for p in self.points:
            if p.shape[0] < 2:
                raise ValueError("every grid dimension needs at least 2 points")
        if self.size > self.cap:
            raise GridTooLargeError(
                f"grid holds {self.size} points, cap is {self.cap}")

    @property
    def size(self) -> int:
        return int(np.prod([p.shape[0] for p in self.points]))


def accurate_complement(f: Objective, partial: PartialSolution, grid: GridSpec,
                        direction: Direction = Direction.MINIMIZE,
                        ) -> tuple[PartialSolution, float]:
    """Exhaustive best remainder for ``partial`` over an explicit grid.

    Walks the whole cartesian product, so it is the ground truth any cheap
    remainder choice is compared against. Ties keep the point whose grid
    index vector comes first lexicographically.
    """
    dim = len(partial) + grid.indices.shape[0]
    joint = np.concatenate([partial.indices, grid.indices])
    if np.unique(joint).shape[0] != joint.shape[0] or \
            (joint.size and (joint.min() < 0 or joint.max() >= dim)):
        raise ValueError("grid indices must be exactly the missing variables")
    buf = np.empty(dim, dtype=np.float64)
    buf[partial.indices] = partial.values
    best_vals = None
    best_value = math.inf
    for combo in itertools.product(*grid.points):
        buf[grid.indices] = combo
        v = float(f(buf))
        if best_vals is None or strictly_better(v, best_value, direction):
            best_vals = combo
            best_value = v
    return PartialSolution(grid.indices, np.asarray(best_vals)), best_value


@dataclass(eq=False)
class InteractionWitness:
    """Concrete evidence that two variables interact.

    Swapping ``x_i`` for ``alt_i`` improves the objective when paired with
    ``x_j`` but worsens it when paired with ``alt_j`` (strictly, both ways):
    the preferred value of one variable depends on the other.
    """

    i: int
    j: int
    base: np.ndarray
    x_i: float
    alt_i: float
    x_j: float
    alt_j: float
    f_base: float        # f with (x_i, x_j)
    f_alt_i: float       # f with (alt_i, x_j)
    f_alt_j: float       # f with (x_i, alt_j)
    f_alt_both: float    # f with (alt_i, alt_j)

    def __post_init__(self):
        self.base = np.array(self.base, dtype=np.float64, copy=True)
        self.base.setflags(write=False)
        if not (self.f_base < self.f_alt_i - INTERACTION_MARGIN
                and self.f_alt_j > self.f_alt_both + INTERACTION_MARGIN):
            raise ValueError("the four values do not exhibit a rank flip")

    def check(self, f: Objective, atol: float = 0.0) -> bool:
        """Re-evaluate the four corners and confirm the flip still holds."""
        vals = []
        for vi, vj in ((self.x_i, self.x_j), (self.alt_i, self.x_j),
                       (self.x_i, self.alt_j), (self.alt_i, self.alt_j)):
            x = self.base.copy()
            x[self.i] = vi
            x[self.j] = vj
            vals.append(float(f(x)))
        fb, fi, fj, fij = vals
        ok = (abs(fb - self.f_base) <= atol and abs(fi - self.f_alt_i) <= atol
              and abs(fj - self.f_alt_j) <= atol
              and abs(fij - self.f_alt_both) <= atol)
        return ok and fb < fi - INTERACTION_MARGIN \
            and fj > fij + INTERACTION_MARGIN


def detect_interaction(f: Objective, i: int, j: int, spec: ProblemSpec,
                       trials: int, rng: RngStream,
                       ) -> InteractionWitness | None:
    """Random search for a rank flip between variables ``i`` and ``j``.

    Each trial draws a base point and one alternative value per variable,
    then checks both orientations of the flip with a small absolute margin
    against float noise. Returns the first witness, or None after
    ``trials`` attempts. One-sided by construction: absence of a witness is
    not proof of independence.
    """
    if i == j:
        raise ValueError("need two distinct variables")
    for _ in range(trials):
        base = spec.sample_uniform(rng)
        alt_i = float(rng.uniform(spec.lower[i], spec.upper[i]))
        alt_j = float(rng.uniform(spec.lower[j], spec.upper[j]))
        x = base.copy()
        f_base = float(f(x))
        x[i] = alt_i
        f_alt_i = float(f(x))
        x[j] = alt_j
        f_alt_both = float(f(x))
        x[i] = base[i]
        f_alt_j = float(f(x))
        m = INTERACTION_MARGIN
        if f_base < f_alt_i - m and f_alt_j > f_alt_both + m:
            return InteractionWitness(i, j, base, float(base[i]), alt_i,
                                      float(base[j]), alt_j,
                                      f_base, f_alt_i, f_alt_j, f_alt_both)
        if f_alt_i < f_base - m and f_alt_both > f_alt_j + m:
            # same flip seen from the alternative side; swap roles of the
            # two i-values so the stored witness is in canonical order
            return InteractionWitness(i, j, base, alt_i, float(base[i]),
                                      float(base[j]), alt_j,
                                      f_alt_i, f_base, f_alt_both, f_alt_j)
    return None


@dataclass(frozen=True, eq=False)
class ProbabilityReport:
    """Product of per-variable probabilities against its power bound.

    For probabilities ``p_1..p_n`` the product never exceeds
    ``mean(p)**n``; equality holds exactly when all entries are equal.
    ``kept_dimensions`` records how many variables were already fixed by
    the partial solution under study and plays no part in the numbers.
    """

    probabilities: np.ndarray
    kept_dimensions: int
    product: float
    mean: float
    bound: float


def lemma1_report(probabilities: Sequence[float], kept_dimensions: int,
                  ) -> ProbabilityReport:
    """Summarize how far a probability product sits below its power bound."""
    p = np.asarray(probabilities, dtype=np.float64).reshape(-1)
    if p.size == 0:
        raise ValueError("need at least one probability")
    if kept_dimensions < 0:
        raise ValueError("kept_dimensions must be >= 0")
    if not np.isfinite(p).all() or (p < 0.0).any() or (p > 1.0).any():
        raise OutOfRangeProbabilityError("probabilities must lie in [0, 1]")
    product = float(np.prod(p))
    mean = float(np.mean(p))
    bound = float(mean ** p.size)
    # mathematically product <= bound always; leave a whisker of float slack
    assert product <= bound * (1.0 + REL_EQ_TOL) + 1e-300, \
        f"product {product} exceeds bound {bound}"
    p.setflags(write=False)
    return ProbabilityReport(p, kept_dimensions, product, mean, bound)


def _sign(x: float, tol: float = 0.0) -> int:
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


def ranking_agreement(f: Objective, partials: Sequence[PartialSolution],
                      complements: Sequence[PartialSolution], grid: GridSpec,
                      direction: Direction = Direction.MINIMIZE) -> float:
    """Fraction of partial-solution pairs ranked the same by both scorers.

    Scores every partial twice: once with its exhaustive best remainder over
    the grid, once with its best remainder from the supplied candidate list.
    A pair counts as concordant when the two score differences have the same
    sign (both zero included). When the candidate list covers the entire
    grid the two scores coincide and the agreement is 1 by construction.
    """
    if len(partials) < 2:
        raise ValueError("need at least two partial solutions to rank")
    oracle_vals = []
    cheap_vals = []
    for partial in partials:
        _, ov = accurate_complement(f, partial, grid, direction)
        oracle_vals.append(ov)
        dim = len(partial) + grid.indices.shape[0]
        buf = np.empty(dim, dtype=np.float64)
        buf[partial.indices] = partial.values
        best = None
        grid_set = frozenset(grid.indices.tolist())
        for comp in complements:
            if frozenset(comp.indices.tolist()) != grid_set:
                raise ValueError(
                    "candidate complements must cover exactly the grid variables")
            buf[comp.indices] = comp.values
            v = float(f(buf))
            if best is None or strictly_better(v, best, direction):
                best = v
        if best is None:
            raise ValueError("need at least one candidate complement")
        cheap_vals.append(best)
    concordant = 0
    pairs = 0
    for a, b in itertools.combinations(range(len(partials)), 2):
        pairs += 1
        if _sign(oracle_vals[a] - oracle_vals[b]) == \
                _sign(cheap_vals[a] - cheap_vals[b]):
            concordant += 1
    return concordant / pairs


@dataclass(frozen=True)
class LogLinearFit:
    """Least-squares line through log(best value) against evaluations."""

    slope: float
    r_squared: float
    points_used: int
    truncated: bool   # leading non-positive values were dropped
    degenerate: bool  # zero variance in the fit window; r_squared set to 0


def loglinear_fit(trace: ConvergenceTrace, window: float = 0.5) -> LogLinearFit:
    """Fit log(best value) ~ evaluations over the trailing part of a trace.

    ``window`` is the trailing fraction of trace points used. Non-positive
    values cannot enter the log; the fit falls back to the longest positive
    suffix of the window and flags the truncation, and it is an error when
    fewer than two positive points remain. A perfectly flat window reports
    a slope of 0 with an r-squared of 0, flagged as degenerate.
    """
    if not 0.0 < window <= 1.0:
        raise ValueError(f"window must be in (0, 1], got {window}")
    n = len(trace)
    if n < 2:
        raise ValueError("need at least two trace points to fit")
    take = max(2, math.ceil(window * n))
    fes = np.asarray(trace.fes[n - take:], dtype=np.float64)
    vals = np.asarray(trace.values[n - take:], dtype=np.float64)
    truncated = False
    nonpos = np.nonzero(vals <= 0.0)[0]
    if nonpos.size:
        first_ok = int(nonpos[-1]) + 1
        if take - first_ok < 2:
            raise NonPositiveValuesError(
                "window has fewer than two positive values to fit")
        fes = fes[first_ok:]
        vals = vals[first_ok:]
        truncated = True
    y = np.log(vals)
    x = fes - fes.mean()
    sxx = float(x @ x)
    if sxx == 0.0:
        raise ValueError("fit window spans a single evaluation count")
    yc = y - y.mean()
    syy = float(yc @ yc)
    slope = float((x @ yc) / sxx)
    if syy == 0.0:
        return LogLinearFit(0.0, 0.0, int(vals.size), truncated, True)
    r2 = float((x @ yc) ** 2 / (sxx * syy))
    return LogLinearFit(slope, r2, int(vals.size), truncated, False)
