"""Divide-and-approximate-conquer optimization toolkit.

High-dimensional black-box minimization by splitting the variables into
groups, improving each group's partial solutions with a local search
operator, and scoring partials against the best-matching remainders drawn
from a small population instead of an exhaustive remainder search.
"""

from .analysis import (
    GridSpec,
    InteractionWitness,
    LogLinearFit,
    ProbabilityReport,
    accurate_complement,
    detect_interaction,
    lemma1_report,
    loglinear_fit,
    ranking_agreement,
)
from .core import (
    ConvergenceTrace,
    Direction,
    EvalCounter,
    FullSolution,
    Grouping,
    PartialSolution,
    ProblemSpec,
    RngStream,
    better,
    compose,
    compose_all,
    counted_eval,
    project,
)
from .dachc import (
    SIGMA_MAX,
    SIGMA_MIN,
    HcState,
    gaussian_mutation,
    run_dachc,
    run_phc,
    success_rate_tau,
    update_step_size,
)
from .errors import (
    BudgetExhaustedError,
    DacoptError,
    DimensionMismatchError,
    DimensionTooSmallError,
    GridTooLargeError,
    IncompatibleDimensionsError,
    IndexOutOfRangeError,
    InvalidGroupCountError,
    NonFiniteValueError,
    NonPositiveValuesError,
    OutOfRangeProbabilityError,
    OverlapOrGapError,
    ProtocolError,
    UsageError,
    WorkerCrashedError,
    WorkerTimeoutError,
)
from .external import ExternalObjective, ExternalObjectiveConfig, external_eval, serve
from .framework import (
    ComplementChoice,
    DacConfig,
    Population,
    approximate_complement,
    make_gaussian_search_op,
    random_grouping,
    run_dac,
)
from .harness import (
    Algorithm,
    ExperimentConfig,
    RunRecord,
    SummaryTable,
    parse_config,
    read_trace_csv,
    run_experiment,
    write_summary,
    write_trace_csv,
)
from .objectives import (
    BenchmarkInstance,
    FunctionId,
    evaluate_instance,
    make_instance,
    rosenbrock,
    schwefel12,
    sphere,
)

__version__ = "0.1.0"
