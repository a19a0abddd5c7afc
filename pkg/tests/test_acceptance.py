"""End-to-end acceptance checks.

Every test prints one PASS/FAIL line directly to the terminal and asserts
the same condition. The benchmark-driven checks share one module-scoped
30-trial run per chain length so the whole suite stays within a desk-scale
budget.
"""

import math
import time

import numpy as np
import pytest

from trailerplan.envmap import (
    ObstacleSet,
    OccupancyGrid,
    build_sdf,
    make_target,
    rasterize,
)
from trailerplan.errors import GenerationFailed
from trailerplan.io import trajectory_samples
from trailerplan.kinematics import RobotState
from trailerplan.optimizer import (
    OptimizerConfig,
    TrajectoryProblem,
    check_feasibility,
    solve_trajectory,
)
from trailerplan.params import benchmark_params
from trailerplan.pipeline import rollout_yaw_error
from trailerplan.scenario import gen_scenario
from trailerplan.search import SearchPath, propagate_trailers, search
from trailerplan.spline import SplineSystem, basis_many

FRONT_BUDGET = 5.0
OPT_CEILING = 5.0


def _report(capsys, name, ok, detail):
    with capsys.disabled():
        print("ACCEPT %-28s %s  (%s)" % (name, "PASS" if ok else "FAIL",
                                         detail))
    assert ok, "%s: %s" % (name, detail)


def _square(cx, cy, h):
    return np.array([[cx - h, cy - h], [cx + h, cy - h],
                     [cx + h, cy + h], [cx - h, cy + h]])


def _fake_path(params, wiggle, speed=1.2, t_end=10.0):
    n = 201
    t = np.linspace(0.0, t_end, n)
    th = wiggle * np.sin(0.35 * t)
    dt = t[1] - t[0]
    x = 4.0 + np.concatenate([[0.0],
                              np.cumsum(speed * np.cos(th[:-1])) * dt])
    y = 15.0 + np.concatenate([[0.0],
                               np.cumsum(speed * np.sin(th[:-1])) * dt])
    yaws = propagate_trailers(t, x, y, th, np.zeros(params.n_trailers),
                              params)
    length = float(np.hypot(np.diff(x), np.diff(y)).sum())
    return SearchPath(t=t, x=x, y=y, theta0=th, v0=np.full(n, speed),
                      delta=np.zeros(n), trailer_yaws=yaws, length=length,
                      score=length, terminal_index=0)


# ----------------------------------------------------------------------
# shared 30-trial benchmark run, one cell per chain length

@pytest.fixture(scope="module")
def bench_cells():
    cells = {}
    for n in (1, 2, 3):
        params = benchmark_params(n)
        trials = []
        for k in range(30):
            sc = None
            for bump in range(20):
                try:
                    sc = gen_scenario(params, k + 100000 * bump)
                    break
                except GenerationFailed:
                    continue
            assert sc is not None
            sdf = build_sdf(rasterize(sc.obstacles, sc.resolution))
            t0 = time.perf_counter()
            sp = search(sc.start, sc.region, sdf, params)
            t_front = time.perf_counter() - t0
            entry = {"t_front": t_front, "found": sp is not None,
                     "converged": False, "feas": None, "yaw_err": None,
                     "t_opt": None, "l_traj": None, "mean_kappa": None}
            if sp is not None:
                res = solve_trajectory(sc.start, sc.region, sdf, params, sp)
                entry["t_opt"] = res.elapsed
                entry["converged"] = res.success
                if res.success:
                    entry["feas"] = check_feasibility(res.trajectory,
                                                      sc.region, sdf, params)
                    entry["yaw_err"] = rollout_yaw_error(res.trajectory,
                                                         params)
                    samples = trajectory_samples(res.trajectory, 0.02)
                    kcol = samples[:, 7]
                    entry["l_traj"] = float(res.trajectory.s_final)
                    entry["mean_kappa"] = float(np.abs(kcol).mean())
            trials.append(entry)
        cells[n] = trials
    return cells


def _successes(trials):
    return [e for e in trials
            if e["converged"] and e["feas"].ok and e["yaw_err"] <= 0.1]


# ----------------------------------------------------------------------

class TestGradientCorrectness:
    def test_analytic_matches_central_differences(self, capsys):
        t_start = time.perf_counter()
        worst = 0.0
        for i in range(10):
            rng = np.random.default_rng(100 + i)
            n = 1 + i % 3
            m = 4 if i % 2 == 0 else 6
            params = benchmark_params(n)
            obs_sdf = build_sdf(rasterize(
                ObstacleSet([_square(9.0, 16.4, 0.6)],
                            (0.0, 0.0, 30.0, 30.0)), 0.1))
            region = make_target(_square(16.0, 15.0, 1.8))
            start = RobotState(x=4.0, y=15.0, theta0=0.0, v0=0.0,
                               thetas=(0.0,) * n)
            cfg = OptimizerConfig(n_pieces=m, theta_factor=2, n_stamps=8)
            prob = TrajectoryProblem(start, region, obs_sdf, params, cfg)
            z = prob.initial_guess(_fake_path(params, 0.2 + 0.05 * (i % 3)))
            z = z + 0.02 * rng.standard_normal(prob.nz)
            lam = 0.5 * rng.standard_normal((prob.q, n))
            mu = rng.uniform(0.0, 0.8, prob.n_ineq)
            rho = 5.0 + 3.0 * rng.random()
            _, grad = prob.alm_value_grad(z, lam, mu, rho)
            h = 1e-6
            for j in range(prob.nz):
                zp = z.copy()
                zp[j] += h
                fp, _ = prob.alm_value_grad(zp, lam, mu, rho)
                zp[j] -= 2.0 * h
                fm, _ = prob.alm_value_grad(zp, lam, mu, rho)
                fd = (fp - fm) / (2.0 * h)
                rel = abs(fd - grad[j]) / max(1.0, abs(fd) + abs(grad[j]))
                worst = max(worst, rel)
        elapsed = time.perf_counter() - t_start
        ok = worst <= 1e-4 and elapsed < 60.0
        _report(capsys, "gradient correctness", ok,
                "worst rel err %.2e over 10 instances in %.1f s"
                % (worst, elapsed))


class TestSplineCorrectness:
    def test_banded_equals_dense_and_smoothness(self, capsys):
        rng = np.random.default_rng(7)
        worst_coeff = worst_jump = worst_bc = 0.0
        for _ in range(50):
            m = int(rng.integers(2, 9))
            d = int(rng.integers(1, 4))
            lengths = rng.uniform(0.4, 2.0, m)
            sys_m = SplineSystem(lengths)
            wp = rng.normal(0.0, 2.0, (m - 1, d))
            sv, svd = rng.normal(size=d), rng.normal(size=d)
            ev, evd = rng.normal(size=d), rng.normal(size=d)
            spl = sys_m.solve(wp, sv, svd, ev, evd)
            dense = sys_m.solve(wp, sv, svd, ev, evd, dense=True)
            worst_coeff = max(worst_coeff,
                              float(np.abs(spl.coeffs - dense.coeffs).max()))
            for j in range(m - 1):
                for o in range(5):
                    left = basis_many(np.array([lengths[j]]),
                                      o)[0] @ spl.coeffs[j]
                    right = basis_many(np.array([0.0]),
                                       o)[0] @ spl.coeffs[j + 1]
                    worst_jump = max(worst_jump,
                                     float(np.abs(left - right).max()))
            b0 = [basis_many(np.array([0.0]), o)[0] @ spl.coeffs[0]
                  for o in range(3)]
            bl = [basis_many(np.array([lengths[-1]]), o)[0] @ spl.coeffs[-1]
                  for o in range(3)]
            for got, want in [(b0[0], sv), (b0[1], svd),
                              (b0[2], np.zeros(d)), (bl[0], ev),
                              (bl[1], evd), (bl[2], np.zeros(d))]:
                worst_bc = max(worst_bc, float(np.abs(got - want).max()))
        ok = worst_coeff <= 1e-9 and worst_jump <= 1e-8 and worst_bc <= 1e-10
        _report(capsys, "spline correctness", ok,
                "banded vs dense %.1e, worst knot jump %.1e, "
                "worst boundary %.1e over 50 instances"
                % (worst_coeff, worst_jump, worst_bc))


class TestDistanceFieldExactness:
    def test_matches_brute_force_and_scales(self, capsys):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(20):
            occ = rng.random((64, 64)) < rng.uniform(0.05, 0.5)
            grid = OccupancyGrid(origin=(0.0, 0.0), resolution=0.1, occ=occ)
            sdf = build_sdf(grid)
            worst = max(worst, float(
                np.abs(sdf.values - _brute_sdf(occ, 0.1)).max()))

        times = {}
        for size in (128, 512):
            occ = rng.random((size, size)) < 0.2
            grid = OccupancyGrid(origin=(0.0, 0.0), resolution=0.1, occ=occ)
            build_sdf(grid)
            best = math.inf
            for _ in range(9):
                t0 = time.perf_counter()
                build_sdf(grid)
                best = min(best, time.perf_counter() - t0)
            times[size] = best
        ratio = times[512] / times[128]
        ok = worst < 1e-9 and ratio <= 20.0
        _report(capsys, "distance field exactness", ok,
                "max abs err %.1e over 20 grids, 512^2/128^2 time ratio "
                "%.1fx" % (worst, ratio))


def _brute_sdf(occ, resolution):
    ny, nx = occ.shape
    iy, ix = np.mgrid[0:ny, 0:nx]
    pts = np.stack([ix.ravel(), iy.ravel()], axis=1).astype(float)
    occ_pts = pts[occ.ravel()]
    free_pts = pts[~occ.ravel()]
    diag = math.hypot(nx * resolution, ny * resolution)
    out = np.empty(ny * nx)
    for k, p in enumerate(pts):
        if occ.ravel()[k]:
            d = np.sqrt(((free_pts - p) ** 2).sum(axis=1)).min() \
                if len(free_pts) else math.inf
            out[k] = -min(d * resolution, diag)
        else:
            d = np.sqrt(((occ_pts - p) ** 2).sum(axis=1)).min() \
                if len(occ_pts) else math.inf
            out[k] = min(d * resolution, diag)
    return out.reshape(ny, nx)


# ----------------------------------------------------------------------

class TestKinematicFidelity:
    def test_rollout_replays_every_success(self, capsys, bench_cells):
        worst_yaw = worst_resid = 0.0
        count = 0
        for trials in bench_cells.values():
            for e in trials:
                if not e["converged"]:
                    continue
                count += 1
                worst_yaw = max(worst_yaw, e["yaw_err"])
                resid = e["feas"].excess["equality"] + 0.05
                worst_resid = max(worst_resid, resid)
        ok = worst_yaw <= 0.1 and worst_resid <= 0.05 and count > 0
        _report(capsys, "kinematic fidelity", ok,
                "worst rollout yaw err %.4f rad, worst coupling residual "
                "%.4f over %d successes" % (worst_yaw, worst_resid, count))


class TestConstraintSatisfaction:
    def test_dense_resampling_passes_on_all_successes(self, capsys,
                                                      bench_cells):
        n_conv = n_pass = 0
        for trials in bench_cells.values():
            for e in trials:
                if not e["converged"]:
                    continue
                n_conv += 1
                n_pass += bool(e["feas"].ok)
        ok = n_conv > 0 and n_pass == n_conv
        _report(capsys, "constraint satisfaction", ok,
                "dense re-sampling suite passed %d/%d converged solves"
                % (n_pass, n_conv))


class TestZeroSpeedEndpoints:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_rest_to_rest_solves_without_speed_floor(self, capsys, n):
        params = benchmark_params(n)
        sc = gen_scenario(params, 1, counts=(0, 0, 0))
        sdf = build_sdf(rasterize(sc.obstacles, sc.resolution))
        sp = search(sc.start, sc.region, sdf, params)
        assert sp is not None
        res = solve_trajectory(sc.start, sc.region, sdf, params, sp)
        traj = res.trajectory
        arr = traj.flat_arrays(np.array([0.0, traj.t_final]))
        den = arr["x1"] ** 2 + arr["y1"] ** 2
        v_ends = np.abs(arr["s1"]) * np.sqrt(den)
        ok = res.success and float(v_ends.max()) <= 1e-3
        _report(capsys, "zero-speed endpoints (N=%d)" % n, ok,
                "start/end speeds %.2e / %.2e m/s"
                % (v_ends[0], v_ends[1]))


class TestBenchmarkQuality:
    def test_medium_band_cells(self, capsys, bench_cells):
        lines = []
        ok = True
        for n, trials in bench_cells.items():
            front = [e for e in trials
                     if e["found"] and e["t_front"] <= FRONT_BUDGET]
            succ = _successes(trials)
            front_rate = len(front) / len(trials)
            succ_rate = len(succ) / len(trials)
            mean_len = float(np.mean([e["l_traj"] for e in succ]))
            mean_kap = float(np.mean([e["mean_kappa"] for e in succ]))
            cell_ok = (front_rate >= 0.9 and succ_rate >= 0.8
                       and mean_kap <= 0.35
                       and 0.7 * 17.0 <= mean_len <= 1.3 * 19.0)
            ok = ok and cell_ok
            lines.append("N=%d front %.0f%% succ %.0f%% |k| %.3f "
                         "len %.1f m" % (n, 100 * front_rate,
                                         100 * succ_rate, mean_kap,
                                         mean_len))
        _report(capsys, "benchmark quality", ok, "; ".join(lines))


class TestOptimizationTimeTrend:
    def test_median_times(self, capsys, bench_cells):
        med = {}
        for n, trials in bench_cells.items():
            times = [e["t_opt"] for e in trials if e["converged"]]
            med[n] = float(np.median(times))
        ok = (med[3] <= 4.0 * med[1]
              and all(m <= OPT_CEILING for m in med.values()))
        _report(capsys, "optimization time trend", ok,
                "median opt time N=1/2/3 = %.2f/%.2f/%.2f s, "
                "N3/N1 = %.2fx" % (med[1], med[2], med[3],
                                   med[3] / med[1]))
