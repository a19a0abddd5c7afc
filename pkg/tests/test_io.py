import numpy as np
import pytest

from trailerplan.envmap import ObstacleSet, build_sdf, rasterize
from trailerplan.errors import ParseError
from trailerplan.io import (
    load_grid,
    load_path,
    load_report,
    load_scenario,
    load_trajectory,
    sample_columns,
    save_grid,
    save_path,
    save_report,
    save_scenario,
    save_trajectory,
    scenario_to_text,
)
from trailerplan.params import benchmark_params
from trailerplan.pipeline import RunReport
from trailerplan.scenario import gen_scenario
from trailerplan.search import SearchPath
from trailerplan.spline import FlatTrajectory, SplineSystem, solve_uniform


def square(cx, cy, h):
    return np.array([[cx - h, cy - h], [cx + h, cy - h],
                     [cx + h, cy + h], [cx - h, cy + h]])


def tiny_trajectory(n_trailers=2):
    """Small but genuine C4 trajectory for round-trip checks."""
    m = 4
    lengths = np.array([2.0, 2.5, 2.0, 1.5])
    sys_xy = SplineSystem(lengths)
    knots = np.cumsum(lengths)[:-1]
    wp = np.column_stack([knots, 0.3 * np.sin(0.4 * knots)])
    spl_xy = sys_xy.solve(wp, [0.0, 0.0], [1.0, 0.0],
                          [7.7, 0.5], [0.995, 0.1])
    tf = 9.0
    usys = SplineSystem(np.ones(m))
    wp_s = knots.reshape(m - 1, 1)
    spl_s = solve_uniform(usys, tf / m, wp_s, [0.0], [0.0],
                          [lengths.sum()], [0.0])
    spl_th = None
    if n_trailers:
        om = 2 * m
        usys_t = SplineSystem(np.ones(om))
        base = np.linspace(0.0, 0.25, om + 1)[1:-1]
        wp_th = np.column_stack([base + 0.02 * i
                                 for i in range(n_trailers)])
        spl_th = solve_uniform(usys_t, tf / om, wp_th,
                               np.zeros(n_trailers),
                               np.full(n_trailers, 0.03),
                               wp_th[-1] + 0.01, np.zeros(n_trailers))
    return FlatTrajectory(xy=spl_xy, s_of_t=spl_s, thetas=spl_th)


class TestGrid:
    def test_round_trip_exact(self, tmp_path):
        obs = ObstacleSet([square(3.0, 3.0, 1.0)], (0.0, 0.0, 8.0, 8.0))
        sdf = build_sdf(rasterize(obs, 0.25))
        p = tmp_path / "grid.txt"
        save_grid(sdf, p)
        back = load_grid(p)
        assert np.array_equal(back.values, sdf.values)
        assert back.origin == sdf.origin
        assert back.resolution == sdf.resolution
        assert back.ceiling == sdf.ceiling

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "grid.txt"
        p.write_text("# something else\n")
        with pytest.raises(ParseError):
            load_grid(p)

    def test_short_row_reports_line(self, tmp_path):
        obs = ObstacleSet([square(3.0, 3.0, 1.0)], (0.0, 0.0, 8.0, 8.0))
        sdf = build_sdf(rasterize(obs, 0.5))
        p = tmp_path / "grid.txt"
        save_grid(sdf, p)
        lines = p.read_text().splitlines()
        lines[7] = "1.0 2.0"
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as exc:
            load_grid(p)
        assert ":8:" in str(exc.value)


class TestPath:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        n, rows = 2, 17
        sp = SearchPath(t=np.sort(rng.uniform(0, 10, rows)),
                        x=rng.normal(size=rows), y=rng.normal(size=rows),
                        theta0=rng.normal(size=rows),
                        v0=rng.uniform(0, 1.5, rows),
                        delta=rng.normal(size=rows) * 0.3,
                        trailer_yaws=rng.normal(size=(rows, n)),
                        length=12.345, score=13.0, terminal_index=3)
        p = tmp_path / "path.txt"
        save_path(sp, p)
        back = load_path(p)
        assert back["n_trailers"] == n
        assert back["length"] == sp.length
        assert back["columns"][-1] == "theta_2"
        data = np.column_stack([sp.t, sp.x, sp.y, sp.theta0, sp.v0,
                                sp.delta, sp.trailer_yaws])
        assert np.array_equal(back["data"], data)

    def test_truncated_file(self, tmp_path):
        sp = SearchPath(t=np.zeros(3), x=np.zeros(3), y=np.zeros(3),
                        theta0=np.zeros(3), v0=np.zeros(3),
                        delta=np.zeros(3), trailer_yaws=np.zeros((3, 1)),
                        length=0.0, score=0.0, terminal_index=0)
        p = tmp_path / "path.txt"
        save_path(sp, p)
        lines = p.read_text().splitlines()
        p.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(ParseError):
            load_path(p)


class TestTrajectory:
    @pytest.mark.parametrize("n_trailers", [0, 2])
    def test_round_trip_exact(self, tmp_path, n_trailers):
        traj = tiny_trajectory(n_trailers)
        params = benchmark_params(max(n_trailers, 1))
        p = tmp_path / "traj.txt"
        save_trajectory(traj, params, p, dt=0.05)
        back, meta = load_trajectory(p)
        assert np.array_equal(back.xy.coeffs, traj.xy.coeffs)
        assert np.array_equal(back.xy.lengths, traj.xy.lengths)
        assert np.array_equal(back.s_of_t.coeffs, traj.s_of_t.coeffs)
        if n_trailers:
            assert np.array_equal(back.thetas.coeffs, traj.thetas.coeffs)
        else:
            assert back.thetas is None
        assert meta["n_trailers"] == n_trailers
        assert meta["t_final"] == traj.t_final
        assert meta["v_mlon"] == params.v_mlon
        assert tuple(meta["columns"]) == sample_columns(n_trailers)
        # dense samples agree with a fresh evaluation of the trajectory
        ts = meta["samples"][:, 0]
        assert ts[0] == 0.0 and abs(ts[-1] - traj.t_final) < 1e-12
        arr = back.flat_arrays(ts)
        assert np.allclose(meta["samples"][:, 2], arr["x0"], atol=1e-12)
        assert np.allclose(meta["samples"][:, 3], arr["y0"], atol=1e-12)

    def test_bad_block_header(self, tmp_path):
        traj = tiny_trajectory(1)
        p = tmp_path / "traj.txt"
        save_trajectory(traj, benchmark_params(1), p)
        text = p.read_text().replace("s_coeffs pieces", "s_coeffs chunks", 1)
        p.write_text(text)
        with pytest.raises(ParseError):
            load_trajectory(p)


class TestScenario:
    def test_round_trip_and_byte_identity(self, tmp_path):
        params = benchmark_params(2)
        sc = gen_scenario(params, 11, counts=(3, 3, 3))
        p1 = tmp_path / "a.yaml"
        p2 = tmp_path / "b.yaml"
        save_scenario(sc, p1)
        back = load_scenario(p1)
        save_scenario(back, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert back.seed == sc.seed
        assert back.start == sc.start
        assert np.array_equal(back.region.vertices, sc.region.vertices)
        assert len(back.obstacles.polygons) == len(sc.obstacles.polygons)
        for a, b in zip(back.obstacles.polygons, sc.obstacles.polygons):
            assert np.array_equal(a, b)

    def test_text_is_sorted_yaml(self):
        params = benchmark_params(1)
        sc = gen_scenario(params, 2, counts=(1, 1, 1))
        text = scenario_to_text(sc)
        keys = [ln.split(":")[0] for ln in text.splitlines()
                if ln and not ln.startswith(" ") and not ln.startswith("-")]
        assert keys == sorted(keys)

    def test_missing_key_raises(self, tmp_path):
        params = benchmark_params(1)
        sc = gen_scenario(params, 2, counts=(1, 1, 1))
        p = tmp_path / "sc.yaml"
        save_scenario(sc, p)
        text = p.read_text().replace("resolution:", "res:")
        p.write_text(text)
        with pytest.raises(ParseError):
            load_scenario(p)


class TestReport:
    def test_round_trip(self, tmp_path):
        rep = RunReport(success=True, stage="ok", n_trailers=2, seed=5,
                        t_front_ms=1.25, t_opt_ms=300.5, l_traj=12.0,
                        t_d=9.0, mean_kappa=0.125, n_expanded=100,
                        n_evals=2000, violation=1e-4,
                        rollout_yaw_err=0.01)
        p = tmp_path / "report.txt"
        save_report(rep, p)
        back = load_report(p)
        assert back["success"] is True
        assert back["stage"] == "ok"
        assert back["n_trailers"] == 2
        assert back["t_opt_ms"] == 300.5
        assert back["violation"] == 1e-4

    def test_none_fields(self, tmp_path):
        rep = RunReport(success=False, stage="front_end", n_trailers=1,
                        seed=3, t_front_ms=55.0, t_opt_ms=0.0)
        p = tmp_path / "report.txt"
        save_report(rep, p)
        back = load_report(p)
        assert back["success"] is False
        assert back["l_traj"] is None
        assert back["stage"] == "front_end"
