"""Command line front end.

Subcommands: gen writes a random scenario file, plan runs one scenario end
to end, bench runs the seeded benchmark matrix, sdf-dump rasterizes a
scenario into a distance grid file, and validate re-checks a trajectory
dump against a scenario.  Solver and search options come from YAML config
files plus repeatable KEY=VALUE flag overrides; no environment variables
are read.
"""

import argparse
import dataclasses
import sys

import yaml

from .envmap import build_sdf, rasterize
from .io import (
    load_grid,
    load_scenario,
    load_trajectory,
    report_to_text,
    save_grid,
    save_scenario,
)
from .optimizer import OptimizerConfig, check_feasibility
from .params import benchmark_params, load_params
from .pipeline import (
    format_bench_table,
    rollout_yaw_error,
    run_bench,
    run_plan,
    write_bench_csv,
)
from .scenario import gen_scenario
from .search import SearchConfig


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _build_config(cls, path, overrides, parser):
    """Dataclass config from an optional YAML file plus KEY=VALUE flags."""
    base = {}
    if path:
        with open(path) as f:
            raw = yaml.safe_load(f)
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            parser.error("%s: config file must hold a mapping" % path)
        base.update(raw)
    for item in overrides or ():
        key, sep, val = item.partition("=")
        if not sep:
            parser.error("override '%s' is not KEY=VALUE" % item)
        base[key.strip()] = yaml.safe_load(val)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(base) - names)
    if unknown:
        parser.error("unknown %s option(s): %s"
                     % (cls.__name__, ", ".join(unknown)))
    kwargs = {k: tuple(v) if isinstance(v, list) else v
              for k, v in base.items()}
    return cls(**kwargs)


def _resolve_params(args, scenario, parser):
    if args.params:
        return load_params(args.params)
    n = args.n_trailers
    if n is None:
        if scenario is None:
            parser.error("need --params or --n-trailers")
        n = len(scenario.start.thetas)
    return benchmark_params(n)


def _cmd_gen(args, parser):
    params = benchmark_params(args.n_trailers if args.n_trailers is not None
                              else 2)
    if args.params:
        params = load_params(args.params)
    sc = gen_scenario(params, args.seed, counts=args.counts,
                      bounds=args.bounds, band=args.band,
                      resolution=args.resolution)
    save_scenario(sc, args.scenario_file)
    print("wrote %s" % args.scenario_file)
    return 0


def _cmd_plan(args, parser):
    sc = load_scenario(args.scenario_file)
    params = _resolve_params(args, sc, parser)
    opt_cfg = _build_config(OptimizerConfig, args.opt_config, args.opt,
                            parser)
    search_cfg = _build_config(SearchConfig, args.search_config, args.search,
                               parser)
    report = run_plan(sc, params, opt_config=opt_cfg,
                      search_config=search_cfg, out_dir=args.out_dir,
                      dump_dt=args.dump_dt)
    sys.stdout.write(report_to_text(report))
    return 0 if report.success else 1


def _cmd_bench(args, parser):
    base = {}
    if args.matrix_file:
        with open(args.matrix_file) as f:
            raw = yaml.safe_load(f)
        if not isinstance(raw, dict):
            parser.error("%s: matrix file must hold a mapping" %
                         args.matrix_file)
        known = {"n_values", "counts", "band", "trials", "seed0"}
        unknown = sorted(set(raw) - known)
        if unknown:
            parser.error("unknown matrix option(s): %s" % ", ".join(unknown))
        base.update(raw)
    if args.n_values is not None:
        base["n_values"] = args.n_values
    if args.counts is not None:
        base["counts"] = args.counts
    if args.band is not None:
        base["band"] = args.band
    if args.trials is not None:
        base["trials"] = args.trials
    if args.seed0 is not None:
        base["seed0"] = args.seed0
    base = {k: tuple(v) if isinstance(v, list) else v
            for k, v in base.items()}
    opt_cfg = _build_config(OptimizerConfig, args.opt_config, args.opt,
                            parser)
    search_cfg = _build_config(SearchConfig, args.search_config, args.search,
                               parser)

    def progress(n, trial, report):
        sys.stderr.write("N=%d trial=%d %s\n"
                         % (n, trial, report.stage))
        sys.stderr.flush()

    rows, cells = run_bench(opt_config=opt_cfg, search_config=search_cfg,
                            progress=progress if args.verbose else None,
                            **base)
    if args.csv:
        write_bench_csv(rows, args.csv)
    sys.stdout.write(format_bench_table(cells) + "\n")
    return 0


def _cmd_sdf_dump(args, parser):
    sc = load_scenario(args.scenario_file)
    res = args.resolution if args.resolution else sc.resolution
    sdf = build_sdf(rasterize(sc.obstacles, res))
    save_grid(sdf, args.out)
    print("wrote %s" % args.out)
    return 0


def _cmd_validate(args, parser):
    sc = load_scenario(args.scenario)
    params = _resolve_params(args, sc, parser)
    traj, meta = load_trajectory(args.trajectory_file)
    if meta["n_trailers"] != params.n_trailers:
        parser.error("trajectory has %d trailers, params have %d"
                     % (meta["n_trailers"], params.n_trailers))
    if args.grid:
        sdf = load_grid(args.grid)
    else:
        sdf = build_sdf(rasterize(sc.obstacles, sc.resolution))
    rep = check_feasibility(traj, sc.region, sdf, params)
    yaw_err = rollout_yaw_error(traj, params)
    for key in sorted(rep.excess):
        print("excess_%s %.6g" % (key, rep.excess[key]))
    print("rollout_yaw_err %.6g" % yaw_err)
    ok = rep.ok and yaw_err <= 0.1
    print("ok %s" % ("true" if ok else "false"))
    return 0 if ok else 1


def _add_config_flags(sub):
    sub.add_argument("--params", help="robot parameter YAML file")
    sub.add_argument("--n-trailers", type=int,
                     help="use built-in benchmark parameters for N trailers")
    sub.add_argument("--opt-config", help="optimizer config YAML file")
    sub.add_argument("--opt", action="append", metavar="KEY=VALUE",
                     help="override one optimizer option")
    sub.add_argument("--search-config", help="search config YAML file")
    sub.add_argument("--search", action="append", metavar="KEY=VALUE",
                     help="override one search option")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trailerplan",
        description="Trajectory planning for a tractor with passive "
                    "trailers.")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="write a random scenario file")
    gen.add_argument("scenario_file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-trailers", type=int, default=None)
    gen.add_argument("--params", help="robot parameter YAML file")
    gen.add_argument("--counts", type=_ints, default=(20, 20, 20),
                     metavar="TRI,QUAD,PENT")
    gen.add_argument("--bounds", type=_floats,
                     default=(0.0, 0.0, 40.0, 40.0),
                     metavar="X0,Y0,X1,Y1")
    gen.add_argument("--band", type=_floats, default=(10.0, 20.0),
                     metavar="LO,HI")
    gen.add_argument("--resolution", type=float, default=0.1)
    gen.set_defaults(func=_cmd_gen)

    plan = subs.add_parser("plan", help="plan one scenario end to end")
    plan.add_argument("scenario_file")
    _add_config_flags(plan)
    plan.add_argument("--out-dir",
                      help="directory for path/trajectory/report dumps")
    plan.add_argument("--dump-dt", type=float, default=0.02,
                      help="sample spacing of the trajectory dump")
    plan.set_defaults(func=_cmd_plan)

    bench = subs.add_parser("bench", help="run the benchmark matrix")
    bench.add_argument("matrix_file", nargs="?",
                       help="YAML with n_values/counts/band/trials/seed0")
    bench.add_argument("--n-values", type=_ints, metavar="N1,N2,...")
    bench.add_argument("--counts", type=_ints, metavar="TRI,QUAD,PENT")
    bench.add_argument("--band", type=_floats, metavar="LO,HI")
    bench.add_argument("--trials", type=int)
    bench.add_argument("--seed0", type=int)
    bench.add_argument("--csv", help="write per-trial rows to this file")
    bench.add_argument("--verbose", action="store_true",
                       help="print per-trial progress to stderr")
    bench.add_argument("--opt-config")
    bench.add_argument("--opt", action="append", metavar="KEY=VALUE")
    bench.add_argument("--search-config")
    bench.add_argument("--search", action="append", metavar="KEY=VALUE")
    bench.set_defaults(func=_cmd_bench)

    sdf = subs.add_parser("sdf-dump",
                          help="write the scenario's distance grid")
    sdf.add_argument("scenario_file")
    sdf.add_argument("--out", required=True)
    sdf.add_argument("--resolution", type=float,
                     help="override the scenario's grid resolution")
    sdf.set_defaults(func=_cmd_sdf_dump)

    val = subs.add_parser("validate",
                          help="re-check a trajectory dump against a "
                               "scenario")
    val.add_argument("trajectory_file")
    val.add_argument("--scenario", required=True)
    val.add_argument("--params", help="robot parameter YAML file")
    val.add_argument("--n-trailers", type=int)
    val.add_argument("--grid", help="reuse a dumped distance grid")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
