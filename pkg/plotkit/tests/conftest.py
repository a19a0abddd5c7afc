import pytest

from plot_fixtures import (
    bench_csv_text,
    scenario_text,
    straight_trajectory_text,
)


@pytest.fixture
def traj_file(tmp_path):
    path = tmp_path / "trajectory.txt"
    path.write_text(straight_trajectory_text())
    return str(path)


@pytest.fixture
def traj_file_n2(tmp_path):
    path = tmp_path / "trajectory_n2.txt"
    path.write_text(straight_trajectory_text(n_trailers=2))
    return str(path)


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(scenario_text())
    return str(path)


@pytest.fixture
def csv_file(tmp_path):
    path = tmp_path / "bench.csv"
    path.write_text(bench_csv_text())
    return str(path)
