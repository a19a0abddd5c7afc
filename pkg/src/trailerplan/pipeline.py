"""End-to-end planning runs and the benchmark harness.

run_plan chains rasterize -> SDF -> search -> trajectory optimization and
gates success on independent validation: the feasibility re-sampling suite
plus replaying the planned controls through the RK4 chain integrator and
comparing trailer yaws.  run_bench repeats run_plan over seeded random
scenarios and aggregates per-cell statistics.

Trial rows hold deterministic fields only, so a fixed seed set reproduces
the benchmark CSV byte-for-byte; wall-clock timings are reported in the
aggregate table, which is machine-dependent by design.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import time

import numpy as np

from . import io as tio
from .envmap import build_sdf, rasterize
from .errors import GenerationFailed
from .kinematics import rollout, wrap_angle
from .optimizer import OptimizerConfig, check_feasibility, solve_trajectory
from .params import benchmark_params
from .scenario import gen_scenario
from .search import SearchConfig, search
from .spline import compose_flat

ROLLOUT_YAW_TOL = 0.1


@dataclasses.dataclass
class RunReport:
    """Outcome of one planning run; metrics are set iff success."""

    success: bool
    stage: str
    n_trailers: int
    seed: int
    t_front_ms: float
    t_opt_ms: float
    l_traj: float = None
    t_d: float = None
    mean_kappa: float = None
    n_expanded: int = 0
    n_evals: int = 0
    violation: float = math.nan
    rollout_yaw_err: float = math.nan


def rollout_yaw_error(traj, params, dt=0.005):
    """Max trailer-yaw gap between the plan and an RK4 replay of it."""
    if traj.n_trailers == 0:
        return 0.0
    tf = traj.t_final
    grid = np.linspace(0.0, tf, max(3, int(math.ceil(tf / (dt / 2))) + 1))
    arr = traj.flat_arrays(grid)
    phys = compose_flat(arr)
    v_tab = phys["v0"]
    d_tab = np.arctan(phys["kappa"] * params.wheelbase)

    def controls(t):
        return (float(np.interp(t, grid, v_tab)),
                float(np.interp(t, grid, d_tab)))

    start, _ = traj.composed_state(0.0, params)
    trace = rollout(start, controls, tf, dt, params)
    planned = traj.thetas.eval_many(np.clip(trace.t, 0.0, tf))[0]
    return float(np.abs(wrap_angle(trace.yaws[:, 1:] - planned)).max())


def run_plan(scenario, params, opt_config=None, search_config=None,
             out_dir=None, dump_dt=0.02):
    """Plan one scenario end to end; optionally write the dump files.

    Gates success on search, optimization, the feasibility re-sampling
    suite and the rollout replay; failures set a stage tag and leave the
    metrics unset, never raise.
    """
    grid = rasterize(scenario.obstacles, scenario.resolution)
    sdf = build_sdf(grid)

    t0 = time.perf_counter()
    sp = search(scenario.start, scenario.region, sdf, params,
                search_config or SearchConfig())
    t_front_ms = 1e3 * (time.perf_counter() - t0)
    if sp is None:
        return RunReport(success=False, stage="front_end",
                         n_trailers=params.n_trailers, seed=scenario.seed,
                         t_front_ms=t_front_ms, t_opt_ms=0.0)

    t1 = time.perf_counter()
    res = solve_trajectory(scenario.start, scenario.region, sdf, params,
                           sp, opt_config or OptimizerConfig())
    t_opt_ms = 1e3 * (time.perf_counter() - t1)
    report = RunReport(success=False, stage="optimize",
                       n_trailers=params.n_trailers, seed=scenario.seed,
                       t_front_ms=t_front_ms, t_opt_ms=t_opt_ms,
                       n_expanded=sp.n_expanded, n_evals=res.n_evals,
                       violation=res.violation)
    if not res.success:
        return report

    traj = res.trajectory
    feas = check_feasibility(traj, scenario.region, sdf, params)
    report.rollout_yaw_err = rollout_yaw_error(traj, params)
    if not feas.ok or report.rollout_yaw_err > ROLLOUT_YAW_TOL:
        report.stage = "validate"
        return report

    samples = tio.trajectory_samples(traj, dump_dt)
    kap = samples[:, tio.sample_columns(params.n_trailers).index("kappa")]
    report.success = True
    report.stage = "ok"
    report.l_traj = float(traj.s_final)
    report.t_d = float(traj.t_final)
    report.mean_kappa = float(np.abs(kap).mean())

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        tio.save_path(sp, os.path.join(out_dir, "path.txt"))
        tio.save_trajectory(traj, params,
                            os.path.join(out_dir, "trajectory.txt"),
                            dt=dump_dt)
        tio.save_report(report, os.path.join(out_dir, "report.txt"))
    return report


# ----------------------------------------------------------------------
# benchmark harness

TRIAL_COLUMNS = ("n_trailers", "seed", "n_tri", "n_quad", "n_pent",
                 "band_lo", "band_hi", "success", "stage", "l_traj",
                 "t_d", "mean_kappa", "n_expanded", "n_evals")


@dataclasses.dataclass
class BenchCell:
    """Aggregate statistics of one (N, complexity, band) cell."""

    n_trailers: int
    counts: tuple
    band: tuple
    trials: int
    n_front_ok: int
    n_success: int
    mean_l_traj: float
    std_l_traj: float
    mean_t_d: float
    mean_kappa: float
    mean_front_ms: float
    median_opt_ms: float
    mean_opt_ms: float

    @property
    def success_rate(self):
        return self.n_success / self.trials

    @property
    def front_rate(self):
        return self.n_front_ok / self.trials


def _trial_row(report, counts, band):
    return {
        "n_trailers": report.n_trailers, "seed": report.seed,
        "n_tri": counts[0], "n_quad": counts[1], "n_pent": counts[2],
        "band_lo": band[0], "band_hi": band[1],
        "success": int(report.success), "stage": report.stage,
        "l_traj": "" if report.l_traj is None else "%.17g" % report.l_traj,
        "t_d": "" if report.t_d is None else "%.17g" % report.t_d,
        "mean_kappa": ("" if report.mean_kappa is None
                       else "%.17g" % report.mean_kappa),
        "n_expanded": report.n_expanded, "n_evals": report.n_evals,
    }


def run_bench(n_values=(1, 2, 3), counts=(20, 20, 20), band=(10.0, 20.0),
              trials=30, seed0=0, opt_config=None, search_config=None,
              csv_path=None, progress=None):
    """Run trials x |n_values| planning runs on seeded random worlds.

    Trial k uses scenario seed seed0 + k for every N, so all chain lengths
    face the same worlds.  Returns (rows, cells): per-trial dict rows in
    TRIAL_COLUMNS order and one BenchCell aggregate per N.
    """
    rows = []
    cells = []
    for n in n_values:
        params = benchmark_params(n)
        reports = []
        for k in range(trials):
            seed = seed0 + k
            sc = None
            for bump in range(20):
                try:
                    sc = gen_scenario(params, seed + 100000 * bump,
                                      counts=counts, band=band)
                    break
                except GenerationFailed:
                    continue
            if sc is None:
                raise GenerationFailed(
                    "benchmark world generation failed for seed %d" % seed)
            rep = run_plan(sc, params, opt_config=opt_config,
                           search_config=search_config)
            reports.append(rep)
            rows.append(_trial_row(rep, counts, band))
            if progress is not None:
                progress(n, k, rep)
        ok = [r for r in reports if r.success]
        front_ok = [r for r in reports if r.stage != "front_end"]
        opt_ms = [r.t_opt_ms for r in ok]
        cells.append(BenchCell(
            n_trailers=n, counts=tuple(counts), band=tuple(band),
            trials=trials, n_front_ok=len(front_ok), n_success=len(ok),
            mean_l_traj=float(np.mean([r.l_traj for r in ok])) if ok else math.nan,
            std_l_traj=float(np.std([r.l_traj for r in ok])) if ok else math.nan,
            mean_t_d=float(np.mean([r.t_d for r in ok])) if ok else math.nan,
            mean_kappa=float(np.mean([r.mean_kappa for r in ok])) if ok else math.nan,
            mean_front_ms=float(np.mean([r.t_front_ms for r in reports])),
            median_opt_ms=float(np.median(opt_ms)) if opt_ms else math.nan,
            mean_opt_ms=float(np.mean(opt_ms)) if opt_ms else math.nan,
        ))
    if csv_path is not None:
        write_bench_csv(rows, csv_path)
    return rows, cells


def write_bench_csv(rows, path):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TRIAL_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def format_bench_table(cells):
    """Aggregate table as fixed-width structured text."""
    hdr = ("N  trials  front%  succ%  l_traj(m)  std   t_d(s)  "
           "|kappa|(1/m)  front(ms)  opt_med(ms)  opt_mean(ms)")
    lines = [hdr]
    for c in cells:
        lines.append(
            "%-2d %-7d %-7.1f %-6.1f %-10.2f %-5.2f %-7.2f %-13.3f "
            "%-10.1f %-12.1f %-12.1f"
            % (c.n_trailers, c.trials, 100 * c.front_rate,
               100 * c.success_rate, c.mean_l_traj, c.std_l_traj,
               c.mean_t_d, c.mean_kappa, c.mean_front_ms, c.median_opt_ms,
               c.mean_opt_ms))
    return "\n".join(lines) + "\n"
