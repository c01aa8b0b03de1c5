"""Batch experiment runner with deterministic, file-based outputs.

One experiment = one benchmark instance x one algorithm x R runs. The
instance is built once from the base seed, so paired comparisons between
algorithms share identical problems; each run draws from its own seed
stream addressed by (base_seed, "run", run_index), which makes results
independent of execution order and of how many workers happen to run them.

Runs may execute in parallel processes (capped by the DACOPT_THREADS
environment variable); every run writes its own trace file and nothing
else, and the per-run records and summary are written once by the parent
after all runs finish. All numbers are printed in round-trip decimal form:
re-running an identical configuration reproduces every output file byte
for byte.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import ConvergenceTrace, Direction, RngStream
from .dachc import run_dachc, run_phc
from .errors import UsageError
from .framework import DacConfig, make_gaussian_search_op, run_dac
from .objectives import FunctionId, make_instance

THREADS_ENV_VAR = "DACOPT_THREADS"

TRACE_HEADER = "run,fe,best_value"
SUMMARY_HEADER = "algo,function,D,m,N,M,budget,runs,mean,std"
RECORDS_HEADER = "run,seed,status,final_value,fes,wall_time_s,trace"


class Algorithm(Enum):
    DACHC = "dac-hc"
    PHC = "phc"
    DAC = "dac"

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise UsageError(f"unknown algorithm {name!r}; expected one of {valid}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    algorithm: Algorithm
    function_id: FunctionId
    dimension: int
    group_size: int
    population: int
    subproblems: int
    budget: int
    runs: int
    base_seed: int
    output_dir: Path
    log_every: int = 1000
    regroup_each_iteration: bool = True


@dataclass(frozen=True)
class RunRecord:
    """Outcome of a single run; failures are recorded, never dropped."""

    run_index: int
    seed: int
    status: str           # "ok" or "error: <what>"
    final_value: float    # nan when the run failed
    fes_consumed: int
    wall_time_s: float
    trace_path: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class SummaryTable:
    """Aggregate of the completed runs of one experiment."""

    algorithm: Algorithm
    function_id: FunctionId
    dimension: int
    group_size: int
    population: int
    subproblems: int
    budget: int
    runs: int             # completed runs aggregated below
    mean: float
    std: float | None     # sample std (n-1 denominator); None below 2 runs


# -- configuration parsing ---------------------------------------------------

# key: (parser, default); None default means the key is required
_CONFIG_SCHEMA = {
    "algo": (str, None),
    "fn": (str, None),
    "dim": (int, 100),
    "m": (int, 10),
    "n": (int, 2),
    "M": (int, 10),
    "budget": (int, 200_000),
    "runs": (int, 10),
    "seed": (int, 42),
    "out": (str, "runs"),
    "log-every": (int, 1000),
    "fixed-grouping": (bool, False),
}


def _parse_bool(token: str) -> bool:
    t = token.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {token!r}")


def parse_config(path: str | Path | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional flat key=value file plus overrides.

    Overrides (typically command-line flags) win over file entries. Unknown
    keys in either source and unreadable values are usage errors.
    """
    merged: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config file {path}: {exc}")
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(
                    f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, _, value = line.partition("=")
            merged[key.strip()] = value.strip()
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    parsed: dict = {}
    for key, value in merged.items():
        if key not in _CONFIG_SCHEMA:
            known = ", ".join(sorted(_CONFIG_SCHEMA))
            raise UsageError(f"unknown configuration key {key!r} (known: {known})")
        kind, _ = _CONFIG_SCHEMA[key]
        if isinstance(value, str):
            try:
                parsed[key] = _parse_bool(value) if kind is bool else kind(value)
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}")
        else:
            parsed[key] = value
    for key, (_, default) in _CONFIG_SCHEMA.items():
        if key not in parsed:
            if default is None:
                raise UsageError(f"missing required configuration key {key!r}")
            parsed[key] = default

    try:
        algorithm = Algorithm.parse(parsed["algo"])
        function_id = FunctionId.parse(parsed["fn"])
    except ValueError as exc:
        raise UsageError(str(exc))
    cfg = ExperimentConfig(
        algorithm=algorithm,
        function_id=function_id,
        dimension=parsed["dim"],
        group_size=parsed["m"],
        population=parsed["n"],
        subproblems=parsed["M"],
        budget=parsed["budget"],
        runs=parsed["runs"],
        base_seed=parsed["seed"],
        output_dir=Path(parsed["out"]),
        log_every=parsed["log-every"],
        regroup_each_iteration=not parsed["fixed-grouping"],
    )
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ExperimentConfig) -> None:
    checks = [
        (cfg.dimension >= 1, "dim must be >= 1"),
        (cfg.group_size >= 1, "m must be >= 1"),
        (cfg.population >= 1, "n must be >= 1"),
        (1 <= cfg.subproblems <= cfg.dimension, "M must be in [1, dim]"),
        (cfg.budget >= cfg.population, "budget must cover initialization"),
        (cfg.runs >= 1, "runs must be >= 1"),
        (cfg.log_every >= 1, "log-every must be >= 1"),
    ]
    for ok, message in checks:
        if not ok:
            raise UsageError(message)


# -- file output --------------------------------------------------------------


def write_trace_csv(trace: ConvergenceTrace, path: str | Path, run: int = 0) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for fe, value in zip(trace.fes, trace.values):
            fh.write(f"{run},{fe},{value!r}\n")


def read_trace_csv(path: str | Path) -> ConvergenceTrace:
    trace = ConvergenceTrace()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER.split(","):
            raise UsageError(f"{path}: not a trace file (header {header})")
        for row in reader:
            trace.record(int(row[1]), float(row[2]))
    return trace


def write_summary(tables, path: str | Path) -> None:
    if isinstance(tables, SummaryTable):
        tables = [tables]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for t in tables:
            std = "" if t.std is None else repr(t.std)
            fh.write(f"{t.algorithm.value},{t.function_id.value},{t.dimension},"
                     f"{t.group_size},{t.population},{t.subproblems},"
                     f"{t.budget},{t.runs},{t.mean!r},{std}\n")


def write_run_records(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORDS_HEADER.split(","))
        for r in records:
            writer.writerow([r.run_index, r.seed, r.status, repr(r.final_value),
                             r.fes_consumed, repr(r.wall_time_s), r.trace_path])


# -- running ------------------------------------------------------------------


def _worker_count(runs: int) -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    if raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            raise UsageError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
        if cap < 1:
            raise UsageError(f"{THREADS_ENV_VAR} must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, runs))


def _trace_path(cfg: ExperimentConfig, run_index: int) -> Path:
    return cfg.output_dir / f"trace_run{run_index:03d}.csv"


def _execute_run(cfg: ExperimentConfig, instance, run_index: int) -> RunRecord:
    rng = RngStream.from_parts(cfg.base_seed, "run", run_index)
    spec = instance.problem_spec()
    dac_cfg = DacConfig(
        population=cfg.population, groups=cfg.subproblems, budget=cfg.budget,
        direction=Direction.MINIMIZE,
        regroup_each_iteration=cfg.regroup_each_iteration,
        seed=cfg.base_seed, log_every=cfg.log_every)
    started = time.perf_counter()
    try:
        if cfg.algorithm is Algorithm.DACHC:
            _, trace = run_dachc(instance, spec, dac_cfg, rng)
        elif cfg.algorithm is Algorithm.PHC:
            _, trace = run_phc(instance, spec, dac_cfg, rng)
        else:
            _, trace = run_dac(instance, spec, dac_cfg,
                               make_gaussian_search_op(spec), rng=rng)
    except Exception as exc:  # a broken run is data, not a crash
        elapsed = time.perf_counter() - started
        return RunRecord(run_index, cfg.base_seed,
                         f"error: {type(exc).__name__}: {exc}",
                         float("nan"), 0, elapsed, "")
    elapsed = time.perf_counter() - started
    path = _trace_path(cfg, run_index)
    write_trace_csv(trace, path, run=run_index)
    return RunRecord(run_index, cfg.base_seed, "ok", trace.final_value,
                     trace.final_fe, elapsed, str(path))


def summarize(cfg: ExperimentConfig, records) -> SummaryTable:
    finals = [r.final_value for r in records if r.ok]
    mean = float(np.mean(finals)) if finals else float("nan")
    std = float(np.std(finals, ddof=1)) if len(finals) >= 2 else None
    return SummaryTable(cfg.algorithm, cfg.function_id, cfg.dimension,
                        cfg.group_size, cfg.population, cfg.subproblems,
                        cfg.budget, len(finals), mean, std)


def run_experiment(cfg: ExperimentConfig) -> tuple[list, SummaryTable]:
    """Run all repetitions, write traces, records, and summary; return both.

    Run r always uses the stream (base_seed, "run", r) regardless of worker
    count, so serial and parallel execution produce identical outputs.
    """
    _validate_config(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    instance = make_instance(cfg.function_id, cfg.dimension, cfg.group_size,
                             cfg.base_seed)
    workers = _worker_count(cfg.runs)
    if workers == 1:
        records = [_execute_run(cfg, instance, r) for r in range(cfg.runs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_execute_run, cfg, instance, r)
                       for r in range(cfg.runs)]
            records = [f.result() for f in futures]
    records.sort(key=lambda r: r.run_index)
    summary = summarize(cfg, records)
    write_run_records(records, cfg.output_dir / "runs.csv")
    write_summary(summary, cfg.output_dir / "summary.csv")
    return records, summary
