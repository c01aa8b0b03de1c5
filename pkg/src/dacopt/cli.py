"""Command-line front end.

Subcommands:

* ``run``         execute an experiment batch and write trace/summary files
* ``oracle``      exhaustive-complement, interaction, and agreement checks
* ``fit``         log-linear convergence fit of a saved trace
* ``bench-info``  print a benchmark instance's shift, permutation, optimum

Exit codes: 0 on success, 2 for usage errors, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import (
    GridSpec,
    accurate_complement,
    detect_interaction,
    loglinear_fit,
    ranking_agreement,
)
from .core import Direction, PartialSolution, ProblemSpec, RngStream
from .errors import DacoptError, UsageError
from .harness import parse_config, read_trace_csv, run_experiment
from .objectives import (
    DEFAULT_LOWER,
    DEFAULT_UPPER,
    FunctionId,
    make_instance,
    rosenbrock,
    schwefel12,
    sphere,
)

_RAW_FUNCTIONS = {
    FunctionId.SPHERE: sphere,
    FunctionId.SCHWEFEL12: schwefel12,
    FunctionId.ROSENBROCK: rosenbrock,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dacopt",
        description="Divide-and-approximate-conquer optimization toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment batch")
    run_p.add_argument("--config", help="flat key=value configuration file")
    run_p.add_argument("--algo", help="dac-hc, phc, or dac")
    run_p.add_argument("--fn", help="f1..f5, sphere, schwefel12, rosenbrock")
    run_p.add_argument("--dim", type=int)
    run_p.add_argument("--m", type=int, help="benchmark block size")
    run_p.add_argument("--n", type=int, help="population size")
    run_p.add_argument("--M", type=int, help="number of variable groups")
    run_p.add_argument("--budget", type=int)
    run_p.add_argument("--runs", type=int)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--log-every", type=int, dest="log_every")
    run_p.add_argument("--fixed-grouping", action="store_true", default=None,
                       dest="fixed_grouping",
                       help="partition variables once instead of every sweep")

    oracle_p = sub.add_parser("oracle", help="ground-truth diagnostics")
    oracle_sub = oracle_p.add_subparsers(dest="oracle_command", required=True)

    comp_p = oracle_sub.add_parser(
        "complement", help="exhaustive best remainder on an explicit grid")
    _add_objective_args(comp_p)
    comp_p.add_argument("--fixed", action="append", required=True,
                        metavar="IDX=VALUE",
                        help="partial-solution coordinate, repeatable")
    comp_p.add_argument("--grid", action="append", required=True,
                        metavar="IDX=V1,V2,...",
                        help="grid points for one remaining dim, repeatable")
    comp_p.add_argument("--cap", type=int, default=1_000_000)

    int_p = oracle_sub.add_parser(
        "interaction", help="search for a rank flip between two variables")
    _add_objective_args(int_p)
    int_p.add_argument("--i", type=int, required=True)
    int_p.add_argument("--j", type=int, required=True)
    int_p.add_argument("--trials", type=int, default=1000)
    int_p.add_argument("--detector-seed", type=int, default=0)

    agree_p = oracle_sub.add_parser(
        "agreement", help="rank agreement of cheap vs exhaustive remainders")
    _add_objective_args(agree_p)
    agree_p.add_argument("--grid", action="append", required=True,
                         metavar="IDX=V1,V2,...")
    agree_p.add_argument("--partials", type=int, default=8,
                         help="random partial solutions to rank")
    agree_p.add_argument("--rows", type=int, default=4,
                         help="random candidate complements")
    agree_p.add_argument("--detector-seed", type=int, default=0)
    agree_p.add_argument("--cap", type=int, default=1_000_000)

    fit_p = sub.add_parser("fit", help="log-linear fit of a trace file")
    fit_p.add_argument("--trace", required=True)
    fit_p.add_argument("--window", type=float, default=0.5,
                       help="trailing fraction of points to fit")

    info_p = sub.add_parser("bench-info", help="describe a benchmark instance")
    info_p.add_argument("--fn", required=True)
    info_p.add_argument("--dim", type=int, required=True)
    info_p.add_argument("--m", type=int, default=10)
    info_p.add_argument("--seed", type=int, default=42)

    return parser


def _add_objective_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fn", required=True,
                   help="f1..f5 (instance) or sphere/schwefel12/rosenbrock (raw)")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--m", type=int, default=10, help="block size for f1..f5")
    p.add_argument("--seed", type=int, default=42, help="instance seed for f1..f5")
    p.add_argument("--low", type=float, default=DEFAULT_LOWER)
    p.add_argument("--high", type=float, default=DEFAULT_UPPER)


def _objective_from_args(args) -> tuple:
    """Returns (callable, ProblemSpec) for oracle subcommands."""
    fid = FunctionId.parse(args.fn)
    spec = ProblemSpec.box(args.dim, args.low, args.high)
    if fid in _RAW_FUNCTIONS:
        return _RAW_FUNCTIONS[fid], spec
    instance = make_instance(fid, args.dim, args.m, args.seed,
                             lower=args.low, upper=args.high)
    return instance, spec


def _parse_indexed(pairs, what: str) -> dict:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"{what} must look like IDX=..., got {pair!r}")
        try:
            idx = int(key)
        except ValueError:
            raise UsageError(f"bad index in {pair!r}")
        if idx in out:
            raise UsageError(f"duplicate index {idx} in {what}")
        out[idx] = value
    return out


def _parse_grid(args, dim: int, fixed_indices) -> GridSpec:
    grid_map = _parse_indexed(args.grid, "--grid")
    try:
        points = {idx: [float(tok) for tok in val.split(",") if tok.strip()]
                  for idx, val in grid_map.items()}
    except ValueError:
        raise UsageError("grid points must be comma-separated numbers")
    expected = sorted(set(range(dim)) - set(fixed_indices))
    if sorted(points) != expected:
        raise UsageError(
            f"grid must cover exactly the non-fixed dims {expected}")
    idx = np.asarray(expected, dtype=np.intp)
    return GridSpec(idx, [points[k] for k in expected], cap=args.cap)


def _cmd_run(args) -> int:
    overrides = {
        "algo": args.algo, "fn": args.fn, "dim": args.dim, "m": args.m,
        "n": args.n, "M": args.M, "budget": args.budget, "runs": args.runs,
        "seed": args.seed, "out": args.out, "log-every": args.log_every,
        "fixed-grouping": args.fixed_grouping,
    }
    cfg = parse_config(args.config, overrides)
    records, summary = run_experiment(cfg)
    failed = [r for r in records if not r.ok]
    print(f"algo={cfg.algorithm.value} fn={cfg.function_id.value} "
          f"D={cfg.dimension} runs={cfg.runs} ok={len(records) - len(failed)} "
          f"failed={len(failed)}")
    std = "" if summary.std is None else f" std={summary.std!r}"
    print(f"mean={summary.mean!r}{std}")
    print(f"outputs in {cfg.output_dir}")
    return 0 if not failed else 3


def _cmd_oracle_complement(args) -> int:
    f, _ = _objective_from_args(args)
    fixed_map = _parse_indexed(args.fixed, "--fixed")
    try:
        fixed = {idx: float(v) for idx, v in fixed_map.items()}
    except ValueError:
        raise UsageError("--fixed values must be numbers")
    grid = _parse_grid(args, args.dim, fixed)
    partial = PartialSolution(np.asarray(sorted(fixed), dtype=np.intp),
                              [fixed[k] for k in sorted(fixed)])
    comp, value = accurate_complement(f, partial, grid)
    coords = " ".join(f"{int(i)}={float(v)!r}"
                      for i, v in zip(comp.indices, comp.values))
    print(f"complement {coords}")
    print(f"value {value!r}")
    return 0


def _cmd_oracle_interaction(args) -> int:
    f, spec = _objective_from_args(args)
    if not (0 <= args.i < args.dim and 0 <= args.j < args.dim):
        raise UsageError("--i/--j must be valid variable indices")
    rng = RngStream.from_parts(args.detector_seed, "interaction-detector")
    witness = detect_interaction(f, args.i, args.j, spec, args.trials, rng)
    if witness is None:
        print(f"no witness in {args.trials} trials "
              "(absence is not proof of independence)")
        return 0
    print(f"witness for variables ({witness.i}, {witness.j})")
    print(f"  x_i={witness.x_i!r} alt_i={witness.alt_i!r}")
    print(f"  x_j={witness.x_j!r} alt_j={witness.alt_j!r}")
    print(f"  f(x_i,x_j)={witness.f_base!r} < f(alt_i,x_j)={witness.f_alt_i!r}")
    print(f"  f(x_i,alt_j)={witness.f_alt_j!r} > "
          f"f(alt_i,alt_j)={witness.f_alt_both!r}")
    return 0


def _cmd_oracle_agreement(args) -> int:
    f, spec = _objective_from_args(args)
    # the grid names the complement side; everything else hosts the partials
    grid_keys = set(_parse_indexed(args.grid, "--grid"))
    grid = _parse_grid(args, args.dim, set(range(args.dim)) - grid_keys)
    if grid.indices.shape[0] >= args.dim:
        raise UsageError("grid must leave at least one dim for the partials")
    part_idx = np.asarray(sorted(set(range(args.dim))
                                 - set(grid.indices.tolist())), dtype=np.intp)
    rng = RngStream.from_parts(args.detector_seed, "agreement")
    partials = [PartialSolution(part_idx, rng.uniform(spec.lower[part_idx],
                                                      spec.upper[part_idx]))
                for _ in range(max(2, args.partials))]
    comps = [PartialSolution(grid.indices,
                             [pts[int(rng.uniform(0, len(pts)))] for pts in grid.points])
             for _ in range(max(1, args.rows))]
    score = ranking_agreement(f, partials, comps, grid)
    print(f"agreement {score!r} over {len(partials)} partials, "
          f"{len(comps)} candidate complements")
    return 0


def _cmd_fit(args) -> int:
    trace = read_trace_csv(args.trace)
    fit = loglinear_fit(trace, args.window)
    print(f"slope {fit.slope!r}")
    print(f"r_squared {fit.r_squared!r}")
    print(f"points {fit.points_used} truncated={fit.truncated} "
          f"degenerate={fit.degenerate}")
    return 0


def _cmd_bench_info(args) -> int:
    fid = FunctionId.parse(args.fn)
    instance = make_instance(fid, args.dim, args.m, args.seed)
    opt = instance.optimum()
    print(f"function {fid.value} dim {args.dim} m {args.m} seed {args.seed}")
    print(f"bounds [{instance.lower!r}, {instance.upper!r}]")
    print("shift " + " ".join(repr(float(v)) for v in instance.shift))
    print("permutation " + " ".join(str(int(i)) for i in instance.permutation))
    print("optimum " + " ".join(repr(float(v)) for v in opt))
    print(f"value_at_optimum {instance.evaluate(opt)!r}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "fit": _cmd_fit,
        "bench-info": _cmd_bench_info,
    }
    oracle_handlers = {
        "complement": _cmd_oracle_complement,
        "interaction": _cmd_oracle_interaction,
        "agreement": _cmd_oracle_agreement,
    }
    try:
        if args.command == "oracle":
            return oracle_handlers[args.oracle_command](args)
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DacoptError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
