import numpy as np
import pytest

from plot_fixtures import bench_csv_text, straight_trajectory_text
from plotkit.formats import (
    ParseError,
    parse_bench_csv,
    parse_scenario,
    parse_trajectory,
)


class TestTrajectory:
    def test_parses_fixture(self, traj_file):
        traj = parse_trajectory(traj_file)
        assert traj["n_trailers"] == 0
        assert traj["t_final"] == 8.0
        assert traj["v_mlon"] == 2.0
        assert traj["kappa_max"] == 0.5
        assert traj["columns"] == ("t", "s", "x", "y", "theta0", "v0",
                                   "acc", "kappa", "a_lat")
        assert traj["samples"].shape == (17, 9)
        assert traj["xy_coeffs"].shape == (2, 6, 2)
        np.testing.assert_array_equal(traj["s_lengths"], [4.0, 4.0])

    def test_parses_trailer_columns(self, traj_file_n2):
        traj = parse_trajectory(traj_file_n2)
        assert traj["n_trailers"] == 2
        assert traj["theta_coeffs"].shape == (4, 6, 2)
        assert traj["columns"][-2:] == ("theta_1", "theta_2")
        assert traj["samples"].shape == (17, 11)

    def test_bad_magic_line_1(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("# wrong\n")
        with pytest.raises(ParseError) as e:
            parse_trajectory(str(path))
        assert e.value.line == 1

    def test_short_sample_row_reports_line(self, tmp_path):
        text = straight_trajectory_text()
        lines = text.splitlines()
        # first sample row sits right after the 'samples' count line
        bad = next(i for i, l in enumerate(lines)
                   if l.startswith("samples")) + 1
        lines[bad] = "1.0 2.0"
        path = tmp_path / "t.txt"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as e:
            parse_trajectory(str(path))
        assert e.value.line == bad + 1
        assert ":%d:" % (bad + 1) in str(e.value)

    def test_truncated_file(self, tmp_path):
        text = straight_trajectory_text()
        path = tmp_path / "t.txt"
        path.write_text("\n".join(text.splitlines()[:10]) + "\n")
        with pytest.raises(ParseError):
            parse_trajectory(str(path))

    def test_wrong_coeff_header(self, tmp_path):
        text = straight_trajectory_text().replace(
            "xy_coeffs pieces 2 dims 2", "xy_coeffs chunks 2 dims 2")
        path = tmp_path / "t.txt"
        path.write_text(text)
        with pytest.raises(ParseError) as e:
            parse_trajectory(str(path))
        assert e.value.line == 7

    def test_wrong_columns_rejected(self, tmp_path):
        text = straight_trajectory_text().replace("columns t s",
                                                  "columns s t")
        path = tmp_path / "t.txt"
        path.write_text(text)
        with pytest.raises(ParseError):
            parse_trajectory(str(path))


class TestScenario:
    def test_parses_fixture(self, scenario_file):
        sc = parse_scenario(scenario_file)
        assert sc["bounds"] == [0.0, 0.0, 30.0, 30.0]
        assert sc["start"]["x"] == 4.0
        assert sc["target"].shape == (4, 2)
        assert len(sc["obstacles"]) == 2
        assert sc["obstacles"][1].shape == (3, 2)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("bounds: [0.0, 0.0, 1.0, 1.0]\n")
        with pytest.raises(ParseError) as e:
            parse_scenario(str(path))
        assert "start" in str(e.value)

    def test_yaml_error_reports_line(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("bounds: [0.0, 0.0, 1.0, 1.0]\nstart: [\n")
        with pytest.raises(ParseError) as e:
            parse_scenario(str(path))
        assert e.value.line >= 2

    def test_degenerate_obstacle(self, tmp_path, scenario_file):
        text = open(scenario_file).read().replace(
            "- [[16.0, 20.0], [18.0, 21.0], [17.0, 23.0]]",
            "- [[16.0, 20.0], [18.0, 21.0]]")
        path = tmp_path / "bad.yaml"
        path.write_text(text)
        with pytest.raises(ParseError) as e:
            parse_scenario(str(path))
        assert "obstacle 1" in str(e.value)


class TestBenchCsv:
    def test_parses_fixture(self, csv_file):
        rows = parse_bench_csv(csv_file)
        assert len(rows) == 4
        assert rows[0]["n_trailers"] == 1
        assert rows[0]["success"] is True
        assert rows[0]["l_traj"] == 16.5
        assert rows[1]["success"] is False
        assert rows[1]["l_traj"] is None
        assert rows[1]["n_evals"] == 30000
        assert rows[3]["band_hi"] == 20.0

    def test_wrong_header_line_1(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ParseError) as e:
            parse_bench_csv(str(path))
        assert e.value.line == 1

    def test_short_row_reports_line(self, tmp_path):
        text = bench_csv_text().splitlines()
        text[2] = "1,1,20"
        path = tmp_path / "b.csv"
        path.write_text("\n".join(text) + "\n")
        with pytest.raises(ParseError) as e:
            parse_bench_csv(str(path))
        assert e.value.line == 3

    def test_bad_value_reports_line(self, tmp_path):
        text = bench_csv_text().replace("1200", "twelve")
        path = tmp_path / "b.csv"
        path.write_text(text)
        with pytest.raises(ParseError) as e:
            parse_bench_csv(str(path))
        assert e.value.line == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("")
        with pytest.raises(ParseError) as e:
            parse_bench_csv(str(path))
        assert e.value.line == 1

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text(bench_csv_text().splitlines()[0] + "\n")
        with pytest.raises(ParseError):
            parse_bench_csv(str(path))
