import pytest

from plotkit.cli import main


class TestRenderCli:
    def test_curves_happy_path(self, tmp_path, traj_file):
        out = tmp_path / "c.png"
        rc = main(["--kind", "curves", "--in", traj_file,
                   "--out", str(out)])
        assert rc == 0
        assert out.exists()

    def test_map_with_limits(self, tmp_path, scenario_file, traj_file):
        out = tmp_path / "m.png"
        rc = main(["--kind", "map", "--in", scenario_file, traj_file,
                   "--out", str(out), "--xlim", "0,12", "--ylim", "4,16",
                   "--dpi", "80"])
        assert rc == 0
        assert out.exists()

    def test_parse_failure_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("# wrong magic\n")
        rc = main(["--kind", "curves", "--in", str(bad),
                   "--out", str(tmp_path / "x.png")])
        assert rc == 1
        err = capsys.readouterr().err
        assert ":1:" in err

    def test_missing_file_exits_nonzero(self, tmp_path, capsys):
        rc = main(["--kind", "bench", "--in", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path / "x.png")])
        assert rc == 1
        assert "nope.csv" in capsys.readouterr().err

    def test_unknown_kind_rejected(self, traj_file, tmp_path):
        with pytest.raises(SystemExit):
            main(["--kind", "contour", "--in", traj_file,
                  "--out", str(tmp_path / "x.png")])

    def test_bad_limits_rejected(self, traj_file, tmp_path):
        with pytest.raises(SystemExit):
            main(["--kind", "curves", "--in", traj_file,
                  "--out", str(tmp_path / "x.png"), "--xlim", "1;2"])
