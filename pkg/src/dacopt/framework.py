"""Cooperative search over sub-problems with cross-row complement selection.

The engine keeps N candidate full solutions (rows). Each group of variables
is improved in turn: a search operator proposes new partial solutions for the
group, and every partial is scored by composing it with the best-matching
remainder taken from the current rows. Scoring against the row pool instead
of an exhaustive remainder search is what keeps the cost per sweep linear in
the group count.

Evaluation accounting is exact and central to the tests: with the incumbent
cache on, scoring an existing row's partial against its own remainder is free
(the composed vector is the row itself), so a budget can be translated into
an exact number of sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    ConvergenceTrace,
    Direction,
    EvalCounter,
    FullSolution,
    Grouping,
    Objective,
    PartialSolution,
    ProblemSpec,
    RngStream,
    better,
    eval_raw,
    strictly_better,
)
from .errors import BudgetExhaustedError, InvalidGroupCountError

SIGMA_INIT = 1.0


@dataclass
class DacConfig:
    """Knobs shared by every divide-and-conquer variant.

    ``log_every`` controls trace density; a point is recorded whenever the
    consumed-evaluation count hits a multiple of it, plus once at the end.
    ``max_iterations`` caps full sweeps for accounting tests; None means run
    until the budget stops the search. ``use_incumbent_cache`` turns the
    free re-scoring of a row against its own remainder on or off; turning it
    off re-buys known values and exists so the uncached cost law can be
    measured directly.
    """

    population: int
    groups: int
    budget: int
    direction: Direction = Direction.MINIMIZE
    regroup_each_iteration: bool = True
    seed: int = 0
    log_every: int = 1
    max_iterations: int | None = None
    use_incumbent_cache: bool = True

    def __post_init__(self):
        if self.population < 1:
            raise ValueError(f"population must be >= 1, got {self.population}")
        if self.groups < 1:
            raise InvalidGroupCountError(f"groups must be >= 1, got {self.groups}")
        if self.budget < self.population:
            raise ValueError(
                f"budget {self.budget} cannot cover the {self.population} "
                "initial evaluations")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0 when set")


@dataclass(eq=False)
class Population:
    """Rows of candidate solutions plus per-(row, group-slot) step sizes.

    ``step_sizes[j, i]`` belongs to slot ``i`` of row ``j`` and survives
    regrouping: after a re-partition, slot ``i`` simply governs whichever
    variables the new group ``i`` holds.
    """

    rows: list
    step_sizes: np.ndarray
    grouping: Grouping

    def __post_init__(self):
        if len(self.rows) < 1:
            raise ValueError("population needs at least one row")
        self.step_sizes = np.asarray(self.step_sizes, dtype=np.float64)
        if self.step_sizes.shape != (len(self.rows), self.grouping.group_count):
            raise ValueError(
                f"step_sizes shape {self.step_sizes.shape} does not match "
                f"(rows={len(self.rows)}, groups={self.grouping.group_count})")
        if not (self.step_sizes > 0).all():
            raise ValueError("step sizes must be positive")

    @property
    def size(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ComplementChoice:
    """Outcome of a complement scan: which row supplied the remainder."""

    row_index: int
    value: float
    fresh_evals: int


def random_grouping(dimension: int, groups: int, rng: RngStream) -> Grouping:
    """Cut a uniform permutation of the variables into near-equal chunks.

    Chunk sizes differ by at most one; the first ``dimension % groups``
    chunks take the extra variable.
    """
    if not 1 <= groups <= dimension:
        raise InvalidGroupCountError(
            f"groups must be in [1, {dimension}], got {groups}")
    perm = rng.permutation(dimension)
    base, extra = divmod(dimension, groups)
    out = []
    at = 0
    for i in range(groups):
        width = base + (1 if i < extra else 0)
        out.append(perm[at:at + width])
        at += width
    return Grouping(dimension, tuple(out))


class _EvalLoop:
    """Per-run evaluation funnel: charges the counter, tracks the best."""

    __slots__ = ("f", "counter", "direction", "trace", "log_every",
                 "best_value", "best_vector")

    def __init__(self, f: Objective, counter: EvalCounter, direction: Direction,
                 log_every: int):
        self.f = f
        self.counter = counter
        self.direction = direction
        self.trace = ConvergenceTrace()
        self.log_every = log_every
        self.best_value: float | None = None
        self.best_vector: np.ndarray | None = None

    def eval_vector(self, vec: np.ndarray) -> float:
        v = eval_raw(self.f, vec, self.counter)
        if self.best_value is None or strictly_better(v, self.best_value,
                                                      self.direction):
            self.best_value = v
            self.best_vector = vec.copy()
        if self.counter.consumed % self.log_every == 0:
            self.trace.record(self.counter.consumed, self.best_value)
        return v

    def finish(self) -> tuple[FullSolution, ConvergenceTrace]:
        if self.best_value is None:
            raise BudgetExhaustedError("no evaluation budget was available")
        t = self.trace
        if not t.fes or t.fes[-1] != self.counter.consumed:
            t.record(self.counter.consumed, self.best_value)
        return FullSolution(self.best_vector, cached_value=self.best_value), t


def _scan_complements(partial_values: np.ndarray, group: np.ndarray,
                      source_rows: Sequence[FullSolution],
                      evaluate: Callable[[np.ndarray], float],
                      cached: tuple[int, float] | None,
                      direction: Direction) -> ComplementChoice:
    """Try the partial against every row's remainder; keep the best combo.

    ``cached`` marks a row whose combination with the partial is already
    known (the row itself), which is skipped for free. Ties keep the lowest
    row index, so the scan result is order-independent.
    """
    best_k = -1
    best_val = 0.0
    fresh = 0
    for k, row in enumerate(source_rows):
        if cached is not None and k == cached[0]:
            val = cached[1]
        else:
            composed = row.values.copy()
            composed[group] = partial_values
            val = evaluate(composed)
            fresh += 1
        if best_k < 0 or strictly_better(val, best_val, direction):
            best_k = k
            best_val = val
    return ComplementChoice(best_k, best_val, fresh)


def approximate_complement(j: int, i: int, pop: Population, f: Objective,
                           counter: EvalCounter, *,
                           direction: Direction = Direction.MINIMIZE,
                           use_cache: bool = True) -> ComplementChoice:
    """Best remainder for row ``j``'s group-``i`` partial, drawn from the rows.

    Evaluates the partial composed with every row's remainder and returns the
    winning row with its composed value. Row ``j``'s own remainder reproduces
    row ``j`` itself, so its stored value is reused without an evaluation
    whenever available.
    """
    group = pop.grouping.groups[i]
    partial = pop.rows[j].values[group]
    cached = None
    if use_cache and pop.rows[j].cached_value is not None:
        cached = (j, pop.rows[j].cached_value)
    return _scan_complements(partial, group, pop.rows,
                             lambda vec: eval_raw(f, vec, counter),
                             cached, direction)


def _init_population(f: Objective, spec: ProblemSpec, cfg: DacConfig,
                     rng: RngStream, loop: _EvalLoop,
                     decomposer) -> Population:
    rows = []
    for _ in range(cfg.population):
        vec = spec.sample_uniform(rng)
        val = loop.eval_vector(vec)
        rows.append(FullSolution(vec, cached_value=val))
    sigma = np.full((cfg.population, cfg.groups), SIGMA_INIT)
    return Population(rows, sigma, decomposer(spec.dimension, cfg.groups, rng))


SearchOperator = Callable[[Population, int, RngStream], Sequence[PartialSolution]]


def run_dac(f: Objective, spec: ProblemSpec, cfg: DacConfig,
            search_op: SearchOperator, decomposer=random_grouping,
            rng: RngStream | None = None,
            step_observer: Callable | None = None,
            ) -> tuple[FullSolution, ConvergenceTrace]:
    """Generic cooperative loop with a pluggable search operator.

    Per group sweep: the operator proposes one new partial per row, the old
    and the new partial each get their best matching remainder from the rows
    as they stood at the start of the group, and each row keeps the winner of
    its own old/new pair (ties promote the challenger). Committing a winner
    stores the composed vector with its value, so every row always carries a
    valid cached value.

    Without the incumbent cache every sweep costs exactly
    ``2 * groups * population**2`` evaluations; with it, re-scoring each old
    partial against its own row is free and the cost drops to
    ``groups * population * (2 * population - 1)``.

    Runs until the budget is exhausted (the normal stop) or, when
    ``cfg.max_iterations`` is set, until that many full sweeps complete.
    ``step_observer``, when given, is called as
    ``observer(iteration, group_index, row_index, value_before, value_after)``
    after each row commit.
    """
    if rng is None:
        rng = RngStream.from_parts(cfg.seed, "search")
    if cfg.groups > spec.dimension:
        raise InvalidGroupCountError(
            f"cannot split {spec.dimension} variables into {cfg.groups} groups")
    loop = _EvalLoop(f, EvalCounter(cfg.budget), cfg.direction, cfg.log_every)
    direction = cfg.direction
    try:
        pop = _init_population(f, spec, cfg, rng, loop, decomposer)
        iteration = 0
        while cfg.max_iterations is None or iteration < cfg.max_iterations:
            if cfg.regroup_each_iteration and iteration > 0:
                pop.grouping = decomposer(spec.dimension, cfg.groups, rng)
            for i in range(pop.grouping.group_count):
                group = pop.grouping.groups[i]
                new_partials = search_op(pop, i, rng)
                # complements come from the rows as they stood entering the
                # group; commits below must not feed back into this sweep
                snapshot = list(pop.rows)
                for j in range(pop.size):
                    before = snapshot[j].cached_value
                    cached = (j, before) if cfg.use_incumbent_cache else None
                    old_choice = _scan_complements(
                        snapshot[j].values[group], group, snapshot,
                        loop.eval_vector, cached, direction)
                    new_choice = _scan_complements(
                        np.asarray(new_partials[j].values), group, snapshot,
                        loop.eval_vector, None, direction)
                    if better(new_choice.value, old_choice.value, direction):
                        win_partial = np.asarray(new_partials[j].values)
                        win = new_choice
                    else:
                        win_partial = snapshot[j].values[group]
                        win = old_choice
                    composed = snapshot[win.row_index].values.copy()
                    composed[group] = win_partial
                    pop.rows[j] = FullSolution(composed, cached_value=win.value)
                    # each commit can only improve the row it replaces
                    assert better(win.value, before, direction), \
                        f"row {j} worsened from {before} to {win.value}"
                    if step_observer is not None:
                        step_observer(iteration, i, j, before, win.value)
            iteration += 1
    except BudgetExhaustedError:
        pass
    return loop.finish()


def gaussian_search_op(pop: Population, i: int, rng: RngStream,
                       spec: ProblemSpec) -> list:
    """Default proposal: add per-slot Gaussian noise to each row's partial."""
    from .dachc import gaussian_mutation  # local import, avoids a cycle

    group = pop.grouping.groups[i]
    out = []
    for j in range(pop.size):
        partial = PartialSolution(group, pop.rows[j].values[group])
        out.append(gaussian_mutation(partial, float(pop.step_sizes[j, i]),
                                     spec, rng))
    return out


def make_gaussian_search_op(spec: ProblemSpec) -> SearchOperator:
    """Bind the default Gaussian proposal operator to a search space."""
    def op(pop: Population, i: int, rng: RngStream):
        return gaussian_search_op(pop, i, rng, spec)
    return op
