"""Hill-climbing instantiation of the cooperative framework.

Each (row, group) step mutates the row's partial with isotropic Gaussian
noise, finds the best remainder for the *old* partial across all rows, and
then scores the mutated partial against that same shared remainder with a
single evaluation. Sharing the remainder halves the cost of the generic
loop: a full sweep consumes exactly ``groups * population**2`` evaluations.

Step sizes follow the one-fifth success rule: grow on success, shrink on
failure, with the growth balanced so a 20% success rate leaves the step
size unchanged on net.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import (
    ConvergenceTrace,
    Direction,
    EvalCounter,
    FullSolution,
    Objective,
    PartialSolution,
    ProblemSpec,
    RngStream,
    better,
)
from .errors import BudgetExhaustedError, InvalidGroupCountError
from .framework import (
    DacConfig,
    Population,
    _EvalLoop,
    _init_population,
    _scan_complements,
    random_grouping,
)

SIGMA_MIN = 1e-12
SIGMA_MAX = 1e4


def success_rate_tau(dimension: int) -> float:
    """Learning rate for the step-size update: 1/sqrt(dimension + 1)."""
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    return 1.0 / math.sqrt(dimension + 1.0)


class HcState:
    """Per-run adaptation state: step-size matrix plus its learning rate.

    ``sigma`` is the same array the population carries as ``step_sizes``;
    entry (j, i) belongs to row j's group slot i and survives regrouping.
    """

    __slots__ = ("sigma", "tau")

    def __init__(self, sigma: np.ndarray, tau: float):
        sigma = np.asarray(sigma, dtype=np.float64)
        if not ((sigma >= SIGMA_MIN) & (sigma <= SIGMA_MAX)).all():
            raise ValueError(
                f"step sizes must lie in [{SIGMA_MIN}, {SIGMA_MAX}]")
        if not 0.0 < tau:
            raise ValueError(f"tau must be positive, got {tau}")
        self.sigma = sigma
        self.tau = tau

    @classmethod
    def for_run(cls, population: int, groups: int, dimension: int) -> "HcState":
        return cls(np.ones((population, groups)), success_rate_tau(dimension))


def gaussian_mutation(partial: PartialSolution, sigma: float,
                      spec: ProblemSpec, rng: RngStream) -> PartialSolution:
    """Perturb every coordinate with N(0, sigma^2) noise, then clamp to bounds.

    Out-of-range coordinates are clipped to the violated bound rather than
    resampled, so one draw per coordinate is consumed no matter where the
    noise lands.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    idx = partial.indices
    moved = partial.values + sigma * rng.standard_normal(idx.shape[0])
    np.clip(moved, spec.lower[idx], spec.upper[idx], out=moved)
    return PartialSolution(idx, moved)


def update_step_size(sigma: float, success: bool, tau: float) -> float:
    """One-fifth rule update, clamped to [SIGMA_MIN, SIGMA_MAX].

    The multiplier is exp(tau * (indicator - 1/5)): one success in five
    steps is the fixed point of the net change.
    """
    indicator = 1.0 if success else 0.0
    factor = math.exp(tau * (indicator - 0.2))
    return min(max(sigma * factor, SIGMA_MIN), SIGMA_MAX)


def _run_hill_climber(f: Objective, spec: ProblemSpec, cfg: DacConfig,
                      rng: RngStream | None, cross_row: bool,
                      step_observer: Callable | None,
                      ) -> tuple[FullSolution, ConvergenceTrace]:
    if rng is None:
        rng = RngStream.from_parts(cfg.seed, "search")
    if cfg.groups > spec.dimension:
        raise InvalidGroupCountError(
            f"cannot split {spec.dimension} variables into {cfg.groups} groups")
    loop = _EvalLoop(f, EvalCounter(cfg.budget), cfg.direction, cfg.log_every)
    direction = cfg.direction
    lower, upper = spec.lower, spec.upper
    try:
        pop = _init_population(f, spec, cfg, rng, loop, random_grouping)
        state = HcState(pop.step_sizes, success_rate_tau(spec.dimension))
        sigma = state.sigma
        rows = pop.rows
        iteration = 0
        while cfg.max_iterations is None or iteration < cfg.max_iterations:
            if cfg.regroup_each_iteration and iteration > 0:
                pop.grouping = random_grouping(spec.dimension, cfg.groups, rng)
            for i in range(pop.grouping.group_count):
                group = pop.grouping.groups[i]
                glo = lower[group]
                ghi = upper[group]
                for j in range(pop.size):
                    row = rows[j]
                    before = row.cached_value
                    old_partial = row.values[group]
                    moved = old_partial + sigma[j, i] * \
                        rng.standard_normal(group.shape[0])
                    np.clip(moved, glo, ghi, out=moved)
                    # remainder chosen for the old partial, then shared with
                    # the mutant: one fresh evaluation per considered row,
                    # plus one for the mutant itself
                    sources = rows if cross_row else rows[j:j + 1]
                    cached = (0 if not cross_row else j, before) \
                        if cfg.use_incumbent_cache else None
                    choice = _scan_complements(old_partial, group, sources,
                                               loop.eval_vector, cached,
                                               direction)
                    base_row = rows[choice.row_index if cross_row else j]
                    mutant_full = base_row.values.copy()
                    mutant_full[group] = moved
                    mutant_value = loop.eval_vector(mutant_full)
                    success = better(mutant_value, choice.value, direction)
                    sigma[j, i] = update_step_size(
                        float(sigma[j, i]), success, state.tau)
                    if success:
                        rows[j] = FullSolution(mutant_full,
                                               cached_value=mutant_value)
                        after = mutant_value
                    elif cross_row and choice.row_index != j:
                        kept = base_row.values.copy()
                        kept[group] = old_partial
                        rows[j] = FullSolution(kept, cached_value=choice.value)
                        after = choice.value
                    else:
                        after = before  # row already embodies the winner
                    assert better(after, before, direction), \
                        f"row {j} worsened from {before} to {after}"
                    if step_observer is not None:
                        step_observer(iteration, i, j, before, after)
            iteration += 1
    except BudgetExhaustedError:
        pass
    return loop.finish()


def run_dachc(f: Objective, spec: ProblemSpec, cfg: DacConfig,
              rng: RngStream | None = None,
              step_observer: Callable | None = None,
              ) -> tuple[FullSolution, ConvergenceTrace]:
    """Hill climber with remainders shared across rows.

    Consumes exactly ``population`` evaluations to initialize and
    ``groups * population**2`` per full sweep (incumbent cache on): for each
    of the ``groups * population`` steps, ``population - 1`` evaluations for
    the remainder scan and one for the mutant.
    """
    return _run_hill_climber(f, spec, cfg, rng, cross_row=True,
                             step_observer=step_observer)


def run_phc(f: Objective, spec: ProblemSpec, cfg: DacConfig,
            rng: RngStream | None = None,
            step_observer: Callable | None = None,
            ) -> tuple[FullSolution, ConvergenceTrace]:
    """Ablation twin of ``run_dachc``: each row keeps its own remainder.

    No cross-row scan happens, so a full sweep costs exactly
    ``groups * population`` evaluations (one per mutant). Everything else,
    including the random draw sequence, matches ``run_dachc``; with a
    population of one the two procedures are the same process.
    """
    return _run_hill_climber(f, spec, cfg, rng, cross_row=False,
                             step_observer=step_observer)
