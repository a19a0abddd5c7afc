import math

import numpy as np
import pytest

from trailerplan.envmap import ObstacleSet, build_sdf, make_target, rasterize
from trailerplan.errors import PathTooShort
from trailerplan.kinematics import RobotState
from trailerplan.optimizer import (
    OptimizerConfig,
    TrajectoryProblem,
    check_feasibility,
    solve_trajectory,
)
from trailerplan.params import benchmark_params
from trailerplan.search import SearchPath, propagate_trailers


def square(cx, cy, half):
    return np.array([[cx - half, cy - half], [cx + half, cy - half],
                     [cx + half, cy + half], [cx - half, cy + half]])


def make_sdf(polys=(), bounds=(0.0, 0.0, 30.0, 30.0), res=0.1):
    return build_sdf(rasterize(ObstacleSet(list(polys), bounds), res))


def fake_path(params, wiggle=0.25, speed=1.2, t_end=10.0):
    """Synthetic smooth trace standing in for a search result."""
    n = 201
    t = np.linspace(0.0, t_end, n)
    th = wiggle * np.sin(0.35 * t)
    dt = t[1] - t[0]
    x = 4.0 + np.concatenate([[0.0],
                              np.cumsum(speed * np.cos(th[:-1])) * dt])
    y = 15.0 + np.concatenate([[0.0],
                               np.cumsum(speed * np.sin(th[:-1])) * dt])
    yaws = propagate_trailers(t, x, y, th,
                              np.zeros(params.n_trailers), params)
    length = float(np.hypot(np.diff(x), np.diff(y)).sum())
    return SearchPath(t=t, x=x, y=y, theta0=th,
                      v0=np.full(n, speed), delta=np.zeros(n),
                      trailer_yaws=yaws, length=length, score=length,
                      terminal_index=0)


def straight_path(params, x0, y0, x1, speed=1.2):
    length = x1 - x0
    t_end = length / speed
    n = 161
    t = np.linspace(0.0, t_end, n)
    x = x0 + speed * t
    return SearchPath(t=t, x=x, y=np.full(n, y0), theta0=np.zeros(n),
                      v0=np.full(n, speed), delta=np.zeros(n),
                      trailer_yaws=np.zeros((n, params.n_trailers)),
                      length=length, score=length, terminal_index=0)


class TestGradient:
    @pytest.mark.parametrize("n_trailers", [1, 2])
    def test_alm_gradient_matches_fd(self, n_trailers):
        rng = np.random.default_rng(7 + n_trailers)
        params = benchmark_params(n_trailers)
        sdf = make_sdf([square(9.0, 16.4, 0.6)])
        region = make_target(square(16.0, 15.0, 1.8))
        start = RobotState(x=4.0, y=15.0, theta0=0.0, v0=0.0,
                           thetas=(0.0,) * n_trailers)
        cfg = OptimizerConfig(n_pieces=4, n_stamps=6)
        prob = TrajectoryProblem(start, region, sdf, params, cfg)
        z = prob.initial_guess(fake_path(params))
        z = z + 0.02 * rng.standard_normal(prob.nz)

        lam = 0.5 * rng.standard_normal((prob.q, n_trailers))
        mu = rng.uniform(0.0, 0.8, prob.n_ineq)
        rho = 7.3

        val, grad = prob.alm_value_grad(z, lam, mu, rho)
        assert np.isfinite(val) and np.all(np.isfinite(grad))
        h = 1e-6
        worst = 0.0
        for i in range(prob.nz):
            zp = z.copy()
            zp[i] += h
            fp, _ = prob.alm_value_grad(zp, lam, mu, rho)
            zp[i] -= 2.0 * h
            fm, _ = prob.alm_value_grad(zp, lam, mu, rho)
            fd = (fp - fm) / (2.0 * h)
            rel = abs(fd - grad[i]) / max(1.0, abs(fd) + abs(grad[i]))
            worst = max(worst, rel)
        assert worst < 1e-5

    def test_stamps_match_independent_evaluation(self):
        params = benchmark_params(2)
        sdf = make_sdf()
        region = make_target(square(16.0, 15.0, 1.8))
        start = RobotState(x=4.0, y=15.0, theta0=0.0, v0=0.0,
                           thetas=(0.0, 0.0))
        cfg = OptimizerConfig(n_pieces=5, n_stamps=7, theta_factor=2)
        prob = TrajectoryProblem(start, region, sdf, params, cfg)
        rng = np.random.default_rng(3)
        z = prob.initial_guess(fake_path(params))
        z = z + 0.01 * rng.standard_normal(prob.nz)
        fw = prob.forward(z)
        ts = fw["tf"] * prob.alpha
        sv = fw["spl_s"].eval_many(ts, max_order=2)
        assert np.allclose(sv[0][:, 0], fw["sv"][0], atol=1e-10)
        assert np.allclose(sv[1][:, 0], fw["sv"][1], atol=1e-10)
        assert np.allclose(sv[2][:, 0], fw["sv"][2], atol=1e-10)
        tv = fw["spl_th"].eval_many(ts, max_order=1)
        assert np.allclose(tv[0], fw["th"], atol=1e-10)
        assert np.allclose(tv[1], fw["th1"], atol=1e-10)
        u = fw["sv"][0]
        inside = (u >= 0.0) & (u <= fw["spl_xy"].total)
        pv = fw["spl_xy"].eval_many(u[inside], max_order=1)
        assert np.allclose(pv[1][:, 0], fw["x1"][inside], atol=1e-10)


class TestSeed:
    def test_initial_guess_is_wellformed(self):
        params = benchmark_params(2)
        sdf = make_sdf()
        region = make_target(square(16.0, 15.0, 1.8))
        start = RobotState(x=4.0, y=15.0, theta0=0.0, v0=0.0,
                           thetas=(0.0, 0.0))
        prob = TrajectoryProblem(start, region, sdf, params)
        path = fake_path(params)
        z = prob.initial_guess(path)
        fw = prob.forward(z)
        # arc-length parameterization keeps the tangent norm near one
        assert fw["den"].min() > 0.8 and fw["den"].max() < 1.2
        assert abs(fw["tf"] - path.length / 1.2) < 1e-6
        assert np.isfinite(prob.violation(fw))

    def test_single_state_path_rejected(self):
        params = benchmark_params(1)
        prob = TrajectoryProblem(
            RobotState(4.0, 15.0, 0.0, 0.0, (0.0,)),
            make_target(square(16.0, 15.0, 1.8)), make_sdf(), params)
        one = SearchPath(t=np.zeros(1), x=np.array([4.0]),
                         y=np.array([15.0]), theta0=np.zeros(1),
                         v0=np.zeros(1), delta=np.zeros(1),
                         trailer_yaws=np.zeros((1, 1)), length=0.0,
                         score=0.0, terminal_index=0)
        with pytest.raises(PathTooShort):
            prob.initial_guess(one)


class TestSolve:
    def test_straight_run_converges(self):
        params = benchmark_params(1)
        sdf = make_sdf()
        region = make_target(square(17.0, 15.0, 1.7))
        start = RobotState(x=5.0, y=15.0, theta0=0.0, v0=0.0, thetas=(0.0,))
        path = straight_path(params, 5.0, 15.0, 17.2)
        res = solve_trajectory(start, region, sdf, params, path)
        assert res.success, res.status
        assert res.violation <= OptimizerConfig().viol_tol
        rep = check_feasibility(res.trajectory, region, sdf, params)
        assert rep.ok, rep.excess
        traj = res.trajectory
        # rest-to-rest: progress rate is pinned to zero at both ends
        arr = traj.flat_arrays(np.array([0.0, traj.t_final]))
        assert abs(arr["s1"][0] - 0.0) < 1e-9
        assert abs(arr["s1"][1]) < 1e-3
        # the horizon actually shrank toward the actuation limits
        assert traj.t_final < path.t[-1]

    def test_curved_two_trailer_converges(self):
        params = benchmark_params(2)
        sdf = make_sdf()
        path = fake_path(params, wiggle=0.3)
        end = np.array([path.x[-1], path.y[-1]])
        region = make_target(square(end[0] + 0.3, end[1], 2.0))
        start = RobotState(x=4.0, y=15.0, theta0=0.0, v0=0.0,
                           thetas=(0.0, 0.0))
        cfg = OptimizerConfig(n_pieces=6, n_stamps=8)
        res = solve_trajectory(start, region, sdf, params, path, cfg)
        assert res.success, (res.status, res.violation)
        rep = check_feasibility(res.trajectory, region, sdf, params,
                                samples_per_piece=80)
        assert rep.ok, rep.excess
