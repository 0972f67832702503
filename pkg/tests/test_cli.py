import json

import pytest

from app.estimators import theta_hat
from app.main import EXIT_BUDGET, EXIT_OK, EXIT_USAGE, main
from app.models import TwoSample


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestEstimate:
    def test_counterexample_files(self, capsys, examples_dir):
        code, out = _run(
            capsys, "estimate",
            "--group1", str(examples_dir / "counterexample_group1.txt"),
            "--group2", str(examples_dir / "counterexample_group2.txt"),
        )
        assert code == EXIT_OK
        assert "theta_hat        0.98" in out
        assert "sigma_N^2        0.0004" in out
        assert "sigma_SHS^2      -0.000225" in out
        assert "warning: SHS variance estimate is negative" in out

    def test_grouped_csv_json(self, capsys, examples_dir):
        code, out = _run(capsys, "estimate", "--data", str(examples_dir / "counterexample.csv"), "--json")
        assert code == EXIT_OK
        report = json.loads(out)
        assert report["summary"]["n1"] == 5
        assert report["estimates"]["sigma_N_sq"] == pytest.approx(0.0004, abs=1e-12)
        assert report["estimates"]["sigma_SHS_sq"] == pytest.approx(-0.000225, abs=1e-12)
        assert report["ci"]["upper"] == 1.0
        assert report["group2"] == [3.0, 4.0, 4.0, 4.0, 5.0]
        assert theta_hat(TwoSample.of(report["group1"], report["group2"])) == report["summary"]["theta_hat"]

    def test_separated_groups_warn_about_degenerate_interval(self, capsys, examples_dir):
        code, out = _run(capsys, "estimate", "--data", str(examples_dir / "separated.csv"), "--level", "0.9")
        assert code == EXIT_OK
        assert "sigma_N^2        0.0" in out
        assert "warning: confidence interval is degenerate at 1.0" in out

    def test_whitespace_and_comments(self, capsys, tmp_path):
        (tmp_path / "a.txt").write_text("# group 1\n1 \n\n2\n")
        (tmp_path / "b.txt").write_text("value\n3\n4  # last\n")
        code, _ = _run(capsys, "estimate", "--group1", str(tmp_path / "a.txt"), "--group2", str(tmp_path / "b.txt"))
        assert code == EXIT_OK

    def test_single_observation(self, capsys, tmp_path):
        (tmp_path / "a.txt").write_text("1\n")
        (tmp_path / "b.txt").write_text("2\n3\n")
        code, _ = _run(capsys, "estimate", "--group1", str(tmp_path / "a.txt"), "--group2", str(tmp_path / "b.txt"))
        assert code == EXIT_USAGE

    @pytest.mark.parametrize("content", ["abc\nxyz\n", "1\nnan\n", "1\ninf\n", ""])
    def test_unreadable_values(self, capsys, tmp_path, content):
        (tmp_path / "a.txt").write_text(content)
        (tmp_path / "b.txt").write_text("2\n3\n")
        code, _ = _run(capsys, "estimate", "--group1", str(tmp_path / "a.txt"), "--group2", str(tmp_path / "b.txt"))
        assert code == EXIT_USAGE

    def test_bad_group_label(self, capsys, tmp_path):
        (tmp_path / "d.csv").write_text("1,1\n3,2\n2,3\n")
        assert _run(capsys, "estimate", "--data", str(tmp_path / "d.csv"))[0] == EXIT_USAGE

    def test_missing_file(self, capsys, tmp_path):
        assert _run(capsys, "estimate", "--data", str(tmp_path / "absent.csv"))[0] == EXIT_USAGE

    def test_needs_input(self, capsys):
        assert _run(capsys, "estimate")[0] == EXIT_USAGE


class TestVerify:
    def test_unbiasedness(self, capsys):
        code, out = _run(capsys, "verify", "unbiasedness", "--n1", "2", "--n2", "3")
        assert code == EXIT_OK
        assert "FAIL" not in out
        assert out.count("PASS") >= 5

    def test_delong_bias(self, capsys):
        code, out = _run(capsys, "verify", "bias", "--fixture", "three_point")
        assert code == EXIT_OK
        assert out.startswith("PASS three_point n1=2 n2=2 DL")

    def test_shs_bias_is_informational(self, capsys):
        code, out = _run(capsys, "verify", "bias", "--estimator", "SHS", "--fixture", "point_mass")
        assert code == EXIT_OK
        assert out.startswith("INFO point_mass")
        assert "bias = -0.25" in out

    def test_bound(self, capsys):
        code, out = _run(capsys, "verify", "bound")
        assert code == EXIT_OK
        assert "max ratio = 1" in out

    def test_identities(self, capsys):
        code, out = _run(capsys, "verify", "identities", "--nsim", "300", "--seed", "9", "--brute-samples", "20")
        assert code == EXIT_OK
        assert out.startswith("PASS identities: 300 samples")

    def test_budget_exceeded(self, capsys):
        code, _ = _run(capsys, "verify", "unbiasedness", "--fixture", "three_point", "--n1", "6", "--n2", "6",
                       "--budget", "1000")
        assert code == EXIT_BUDGET

    def test_bad_grid(self, capsys):
        assert _run(capsys, "verify", "bound", "--grid", "1,x")[0] == EXIT_USAGE


class TestSimulate:
    def test_config_to_csv(self, capsys, tmp_path):
        config = tmp_path / "small.json"
        config.write_text(json.dumps({
            "experiment": "bias",
            "specs": [{"name": "normal", "params": {"theta": 0.6}}],
            "n1": 5,
            "n2": 6,
            "nsim": 20,
        }))
        out_file = tmp_path / "results" / "small.csv"
        code, _ = _run(capsys, "simulate", "--config", str(config), "--out", str(out_file), "--threads", "1")
        assert code == EXIT_OK
        lines = out_file.read_text().splitlines()
        assert lines[0] == "spec,theta,n1,n2,estimator,mean,bias,variance,qmse,se,nsim"
        assert len(lines) == 6

    def test_overrides_to_stdout(self, capsys, tmp_path):
        config = tmp_path / "small.json"
        config.write_text(json.dumps({"experiment": "bias", "specs": [{"name": "dmax", "params": {"theta": 0.5}}],
                                      "estimators": ["N"]}))
        code, out = _run(capsys, "simulate", "--config", str(config), "--nsim", "7", "--seed", "1", "--threads", "1")
        assert code == EXIT_OK
        assert out.splitlines()[1].endswith(",7")

    def test_malformed_config(self, capsys, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text('{"experiment": "bias", "specs": []}')
        assert _run(capsys, "simulate", "--config", str(config))[0] == EXIT_USAGE

    def test_unknown_name(self, capsys):
        assert _run(capsys, "simulate", "--name", "no_such_experiment")[0] == EXIT_USAGE


@pytest.mark.parametrize("argv", [[], ["estimate", "--level"], ["simulate"], ["verify", "bias", "--estimator", "XX"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
