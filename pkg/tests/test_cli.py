"""Command-line interface: flags, CSV schema, determinism, exit codes."""
import pytest

from rig import cli


def run_cli(argv):
    return cli.main(argv)


def data_lines(path):
    with open(path) as fh:
        return [line for line in fh if not line.startswith("#")]


class TestSweepCommand:
    def test_single_point_single_row(self, tmp_path):
        out = tmp_path / "one.csv"
        code = run_cli(["sweep", "--metric", "circle", "--n", "20", "--p", "0.4",
                        "--vary", "r", "--min", "0.1", "--max", "0.1",
                        "--step", "0.01", "--trials", "1", "--out", str(out)])
        assert code == 0
        lines = data_lines(out)
        assert lines[0].rstrip("\n") == ",".join(cli.CSV_COLUMNS)
        assert len(lines) == 2

    def test_both_metric_two_rows_per_point(self, tmp_path):
        out = tmp_path / "both.csv"
        run_cli(["sweep", "--metric", "both", "--n", "20", "--p", "0.4",
                 "--vary", "r", "--min", "0.05", "--max", "0.1",
                 "--step", "0.05", "--trials", "5", "--out", str(out)])
        rows = [line.split(",") for line in data_lines(out)[1:]]
        assert [row[0] for row in rows] == ["circle", "interval"] * 2

    def test_reruns_byte_identical(self, tmp_path):
        args = ["sweep", "--metric", "both", "--n", "30", "--r", "0.1",
                "--vary", "p", "--min", "0.1", "--max", "0.3", "--step", "0.1",
                "--trials", "40", "--seed", "7"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(args + ["--out", str(out1)])
        run_cli(args + ["--out", str(out2)])
        assert data_lines(out1) == data_lines(out2)

    def test_manifest_comments_present(self, tmp_path):
        out = tmp_path / "m.csv"
        run_cli(["sweep", "--metric", "circle", "--n", "20", "--p", "0.4",
                 "--vary", "r", "--min", "0.1", "--max", "0.1", "--step", "0.1",
                 "--trials", "2", "--out", str(out)])
        header = [line for line in open(out) if line.startswith("#")]
        joined = "".join(header)
        assert "# command: rig sweep" in joined
        assert "# seed:" in joined
        assert "# timestamp:" in joined

    def test_grid_includes_endpoint(self, tmp_path):
        out = tmp_path / "g.csv"
        run_cli(["sweep", "--metric", "circle", "--n", "20", "--p", "0.4",
                 "--vary", "r", "--min", "0.02", "--max", "0.2",
                 "--step", "0.005", "--trials", "1", "--out", str(out)])
        assert len(data_lines(out)) == 1 + 37

    def test_conflicting_fixed_param_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli(["sweep", "--metric", "circle", "--n", "20", "--p", "0.4",
                     "--r", "0.1", "--vary", "r", "--min", "0.1", "--max", "0.1",
                     "--step", "0.1", "--out", str(tmp_path / "x.csv")])
        assert err.value.code == 2

    def test_missing_fixed_param_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli(["sweep", "--metric", "circle", "--n", "20", "--vary", "r",
                     "--min", "0.1", "--max", "0.1", "--step", "0.1",
                     "--out", str(tmp_path / "x.csv")])
        assert err.value.code == 2

    def test_infeasible_grid_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli(["sweep", "--metric", "circle", "--n", "20", "--r", "0.1",
                     "--vary", "p", "--min", "0.8", "--max", "1.2",
                     "--step", "0.1", "--out", str(tmp_path / "x.csv")])
        assert err.value.code == 2

    def test_seventeen_digit_serialization(self, tmp_path):
        out = tmp_path / "d.csv"
        run_cli(["sweep", "--metric", "circle", "--n", "20", "--p", "0.4",
                 "--vary", "r", "--min", "0.1", "--max", "0.1", "--step", "0.1",
                 "--trials", "3", "--out", str(out)])
        row = data_lines(out)[1].split(",")
        assert row[2] == "0.10000000000000001"  # r at 17 significant digits


class TestCriticalCommand:
    def test_zero_law_solves_r(self, capsys):
        run_cli(["critical", "--n", "100", "--fix", "p=0.25", "--law", "zero"])
        out = capsys.readouterr().out
        assert "critical r = 0.092103403719761" in out

    def test_one_interval_solves_p(self, capsys):
        run_cli(["critical", "--n", "100", "--fix", "r=0.1",
                 "--law", "one-interval"])
        out = capsys.readouterr().out
        assert "critical p = 0.307799056018019" in out

    def test_saturated_ell(self, capsys):
        run_cli(["critical", "--n", "100", "--fix", "r=0.6", "--law", "zero"])
        out = capsys.readouterr().out
        assert "critical p = 0.046051701859880" in out

    def test_one_circle_alias_of_zero_scaling(self, capsys):
        run_cli(["critical", "--n", "100", "--fix", "r=0.1", "--law", "zero"])
        first = capsys.readouterr().out
        run_cli(["critical", "--n", "100", "--fix", "r=0.1",
                 "--law", "one-circle"])
        second = capsys.readouterr().out
        assert first.splitlines()[1] == second.splitlines()[1]

    def test_infeasible_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["critical", "--n", "10", "--fix", "r=0.01",
                     "--law", "zero"])
        assert err.value.code == 2

    def test_malformed_fix_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["critical", "--n", "10", "--fix", "q=0.1", "--law", "zero"])
        assert err.value.code == 2


class TestMomentsCommand:
    def test_circle_near_critical(self, capsys):
        run_cli(["moments", "--metric", "circle", "--n", "100", "--r", "0.1",
                 "--p", "0.2302585092994046"])
        out = capsys.readouterr().out
        assert "expected_isolated = 0.93963442155868" in out
        assert "pair_moment" in out and "(exact)" in out

    def test_ratio_bound_two(self, capsys):
        run_cli(["moments", "--metric", "circle", "--n", "10", "--r", "0.6",
                 "--p", "0.5"])
        out = capsys.readouterr().out
        assert "ratio_upper = 2" in out

    def test_undefined_ratio(self, capsys):
        run_cli(["moments", "--metric", "circle", "--n", "10", "--r", "0.6",
                 "--p", "1"])
        out = capsys.readouterr().out
        assert "undefined (zero denominator)" in out

    def test_p_zero_expectations(self, capsys):
        run_cli(["moments", "--metric", "interval", "--n", "10", "--r", "0.2",
                 "--p", "0"])
        out = capsys.readouterr().out
        assert "first_moment_per_node = 1" in out
        assert "expected_isolated = 10" in out


class TestVerifyCommand:
    def test_quick_suite_exit_zero(self, capsys):
        code = run_cli(["verify", "--quick"])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS" in out and "FAIL" not in out

    def test_tampered_suite_exit_nonzero(self, capsys, monkeypatch):
        from rig import analytic
        true_fn = analytic.first_moment_circle
        monkeypatch.setattr(analytic, "first_moment_circle",
                            lambda n, params: true_fn(n, params) + 1e-7)
        code = run_cli(["verify", "--quick"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out
