"""Scenario runner: config parsing, artifacts, exit codes, determinism."""

import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from hevlab.cli import main, parse_config, serialize_config
from hevlab.errors import ConfigError

FULL_CONFIG = """\
scenario = "demo"
gamma = 0.0
p = 1.0
seed = 11
grid = 64
theta = [4.0, 32.0]

[law]
mixing = "f0"
sample_size = 64
x_values = [0.0, 1.0]

[compare]
left = "f0"
right = "point"
geodesic_points = 5
pointwise_points = 7

[offers]
family = "pareto"
gamma = 0.5

[horizon]
mixing = "f0"
x_min = -0.5
x_max = 4.0
x_points = 9
sim_theta = 20.0
sim_size = 20000

[design]
baseline = "f3"
lambda = 1.0

[design.score]
kind = "cdf"
y = 0.0

[certify]
pairs = 3
gammas = [0.0, 0.25, 0.6]
ps = [1.0, 2.0]
atoms = 3

[distributions.f0]
kind = "atoms"
locations = [0.5, 3.0]
weights = [0.8, 0.2]

[distributions.point]
kind = "dirac"
location = 1.0

[distributions.f3]
kind = "atoms"
locations = [0.5, 1.0, 2.0]
weights = [0.4, 0.4, 0.2]
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text(FULL_CONFIG, encoding="utf-8")
    return path


def _read_csv(path):
    comments, header, rows = [], None, []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


def _stderr_error(capsys):
    err = capsys.readouterr().err
    return json.loads(err)["error"]


class TestParsing:
    def test_round_trip_is_a_fixed_point(self):
        cfg = parse_config(FULL_CONFIG)
        text = serialize_config(cfg)
        again = parse_config(text)
        assert again == cfg
        assert serialize_config(again) == text

    def test_defaults(self):
        cfg = parse_config('scenario = "s"\ngamma = 0.25\n')
        assert cfg.p == 1.0
        assert cfg.seed == 0
        assert cfg.grid == 512
        assert cfg.out == "artifacts"
        assert cfg.theta == ()
        assert cfg.law is None and cfg.design is None

    def test_syntax_error_keeps_line_anchor(self):
        with pytest.raises(ConfigError, match=r"line 2"):
            parse_config('scenario = "x"\ngamma = @\np = 1.0\n')

    def test_missing_required_top_level_key(self):
        with pytest.raises(ConfigError, match="gamma"):
            parse_config('scenario = "s"\n')

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown top-level"):
            parse_config('scenario = "s"\ngamma = 0.0\nbogus = 1\n')

    def test_booleans_are_not_numbers(self):
        with pytest.raises(ConfigError, match="expected a number"):
            parse_config('scenario = "s"\ngamma = true\n')

    def test_unknown_distribution_kind_lists_the_options(self):
        text = 'scenario = "s"\ngamma = 0.0\n[distributions.d]\nkind = "cauchy"\n'
        with pytest.raises(ConfigError, match="atoms"):
            parse_config(text)

    def test_distribution_missing_parameter(self):
        text = 'scenario = "s"\ngamma = 0.0\n[distributions.d]\nkind = "dirac"\n'
        with pytest.raises(ConfigError, match="location"):
            parse_config(text)

    def test_block_rejects_unknown_keys(self):
        text = 'scenario = "s"\ngamma = 0.0\n[law]\nmixing = "d"\ntypo = 1\n'
        with pytest.raises(ConfigError, match="typo"):
            parse_config(text)

    def test_design_lambda_must_be_positive(self):
        text = (
            'scenario = "s"\ngamma = 0.0\n[design]\nbaseline = "d"\n'
            'lambda = -1.0\n[design.score]\nkind = "constant"\n'
        )
        with pytest.raises(ConfigError, match="lambda"):
            parse_config(text)


class TestLawCommand:
    def test_cdf_table(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["law", "--config", str(config_path), "--out", str(out)]) == 0
        comments, header, rows = _read_csv(out / "law_cdf.csv")
        assert comments == ["# scenario=demo", "# seed=11"]
        assert header == ["x", "H"]
        assert len(rows) == 2
        # H(x) = 0.8 exp(-v(x)/2) + 0.2 exp(-3 v(x)) under a Gumbel kernel
        h0 = 0.8 * math.exp(-0.5) + 0.2 * math.exp(-3.0)
        v1 = math.exp(-1.0)
        h1 = 0.8 * math.exp(-0.5 * v1) + 0.2 * math.exp(-3.0 * v1)
        assert float(rows[0][1]) == pytest.approx(h0, abs=1e-12)
        assert float(rows[1][1]) == pytest.approx(h1, abs=1e-12)

    def test_quantile_schedule(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["law", "--config", str(config_path), "--out", str(out), "quantile"]) == 0
        _, header, rows = _read_csv(out / "law_quantile.csv")
        assert header == ["u", "Q"]
        u = np.array([float(r[0]) for r in rows])
        q = np.array([float(r[1]) for r in rows])
        np.testing.assert_allclose(u, np.arange(1, 65) / 65.0, atol=1e-15)
        assert np.all(np.diff(q) > 0)

    def test_sample_size_and_meta(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["law", "--config", str(config_path), "--out", str(out), "sample"]) == 0
        _, header, rows = _read_csv(out / "law_sample.csv")
        assert header == ["value"]
        assert len(rows) == 64
        meta = json.loads((out / "scenario_meta.json").read_text())
        assert meta["command"] == "law"
        assert meta["gamma"] == 0.0
        assert meta["seed"] == 11

    def test_degree_histogram_reports_raw_mean(self, tmp_path):
        text = FULL_CONFIG + (
            '\n[distributions.net]\nkind = "degree_histogram"\n'
            "degrees = [1.0, 2.0, 3.0]\ncounts = [2.0, 1.0, 1.0]\n"
        )
        path = tmp_path / "deg.toml"
        path.write_text(text)
        out = tmp_path / "art"
        assert main(["law", "--config", str(path), "--out", str(out)]) == 0
        meta = json.loads((out / "scenario_meta.json").read_text())
        # mean degree (2*1 + 1*2 + 1*3) / 4, stored before mean-one scaling
        assert meta["raw_degree_means"] == {"net": 1.75}


class TestCompareCommand:
    def test_artifacts(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["compare", "--config", str(config_path), "--out", str(out)]) == 0
        cert = json.loads((out / "compare_certificate.json").read_text())
        assert cert["left"] == "f0" and cert["right"] == "point"
        assert cert["certificate"]["passed"] is True

        _, header, rows = _read_csv(out / "compare_schedule.csv")
        assert header == ["u", "left", "right", "gap"]
        assert len(rows) == 64

        _, header, rows = _read_csv(out / "compare_pointwise.csv")
        assert header == ["x", "gap", "bound", "w1", "passed"]
        assert len(rows) == 7
        assert all(r[4] == "true" for r in rows)
        assert all(float(r[1]) <= float(r[2]) + 1e-12 for r in rows)

    def test_geodesic_midpoint_mean(self, config_path, tmp_path):
        # log-scale midpoint of 0.8 d(0.5) + 0.2 d(3) against d(1)
        out = tmp_path / "art"
        assert main(["compare", "--config", str(config_path), "--out", str(out)]) == 0
        _, header, rows = _read_csv(out / "compare_geodesic.csv")
        assert header == ["t", "mean", "bridge_distance"]
        assert [float(r[0]) for r in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]
        mid = 0.8 / math.sqrt(2.0) + 0.2 * math.sqrt(3.0)
        assert float(rows[2][1]) == pytest.approx(mid, abs=1e-12)
        # endpoints are mean-one, so the renormalization distance vanishes
        assert float(rows[0][2]) == pytest.approx(0.0, abs=1e-12)
        assert float(rows[4][2]) == pytest.approx(0.0, abs=1e-12)
        assert float(rows[2][2]) == pytest.approx(abs(math.log(mid)), abs=1e-9)

    def test_regime_failure_degrades_to_certificate_slot(self, tmp_path):
        # gamma p = 1 kills the constant, but pointwise bounds still apply
        text = FULL_CONFIG.replace("gamma = 0.0", "gamma = 0.5", 1).replace(
            "p = 1.0", "p = 2.0", 1
        )
        path = tmp_path / "regime.toml"
        path.write_text(text)
        out = tmp_path / "art"
        assert main(["compare", "--config", str(path), "--out", str(out)]) == 0
        cert = json.loads((out / "compare_certificate.json").read_text())
        assert "certificate" not in cert
        assert cert["error"]["type"] == "RegimeError"
        assert (out / "compare_pointwise.csv").exists()
        assert (out / "compare_schedule.csv").exists()

    def test_positional_names_override_the_block(self, tmp_path):
        text = FULL_CONFIG.replace('left = "f0"\nright = "point"\n', "")
        path = tmp_path / "noblock.toml"
        path.write_text(text)
        out = tmp_path / "art"
        rc = main(["compare", "--config", str(path), "--out", str(out), "point", "f0"])
        assert rc == 0
        cert = json.loads((out / "compare_certificate.json").read_text())
        assert cert["left"] == "point" and cert["right"] == "f0"

    def test_compare_needs_names(self, tmp_path, capsys):
        text = FULL_CONFIG.replace('left = "f0"\nright = "point"\n', "")
        path = tmp_path / "noblock.toml"
        path.write_text(text)
        rc = main(["compare", "--config", str(path), "--out", str(tmp_path / "art")])
        assert rc == 2
        assert _stderr_error(capsys)["type"] == "ConfigError"


class TestDesignCommand:
    def test_solution_and_threshold(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["design", "--config", str(config_path), "--out", str(out)]) == 0
        payload = json.loads((out / "design_solution.json").read_text())
        sol = payload["solution"]
        assert sol["mean_residual"] <= 1e-10
        assert sol["primal_value"] == pytest.approx(sol["dual_value"], abs=1e-8)
        assert sol["eta_star"] == pytest.approx(0.31413025098401376, abs=1e-9)
        assert sum(sol["weights"]) == pytest.approx(1.0, abs=1e-12)
        thr = payload["threshold"]
        assert thr["y"] == 0.0
        assert thr["after"] > thr["before"]
        assert thr["kl_cost"] == pytest.approx(sol["kl"], abs=1e-15)

        _, header, rows = _read_csv(out / "design_odds.csv")
        assert header == ["i", "j", "x_i", "x_j", "odds"]
        assert len(rows) == 3
        assert all(float(r[4]) > 0.0 for r in rows)

        _, _, rows = _read_csv(out / "design_schedule.csv")
        assert len(rows) == 64

    def test_two_atom_baseline_is_pinned(self, tmp_path):
        # With two fixed locations the mean-one constraint has a unique
        # solution, so the tilt must return the baseline weights.
        text = FULL_CONFIG.replace('baseline = "f3"', 'baseline = "f0"')
        path = tmp_path / "two.toml"
        path.write_text(text)
        out = tmp_path / "art"
        assert main(["design", "--config", str(path), "--out", str(out)]) == 0
        sol = json.loads((out / "design_solution.json").read_text())["solution"]
        assert sol["kl"] <= 1e-12
        np.testing.assert_allclose(sol["weights"], [0.8, 0.2], atol=1e-9)

    def test_inadmissible_design_exits_3(self, tmp_path, capsys):
        text = FULL_CONFIG.replace('baseline = "f3"', 'baseline = "heavy"').replace(
            'kind = "cdf"\ny = 0.0', 'kind = "power"\ncoeff = 1.0\nrho = 2.0'
        ) + '\n[distributions.heavy]\nkind = "gamma"\nshape = 2.0\n'
        path = tmp_path / "adm.toml"
        path.write_text(text)
        rc = main(["design", "--config", str(path), "--out", str(tmp_path / "art")])
        assert rc == 3
        error = _stderr_error(capsys)
        assert error["type"] == "AdmissibilityError"
        assert error["exit_code"] == 3

    def test_unreachable_constraint_exits_4(self, tmp_path, capsys):
        text = FULL_CONFIG.replace('baseline = "f3"', 'baseline = "f0"').replace(
            'kind = "cdf"\ny = 0.0', 'kind = "power"\ncoeff = 4000000.0\nrho = 1.0'
        )
        path = tmp_path / "brk.toml"
        path.write_text(text)
        rc = main(["design", "--config", str(path), "--out", str(tmp_path / "art")])
        assert rc == 4
        error = _stderr_error(capsys)
        assert error["type"] == "BracketError"
        assert error["exit_code"] == 4


class TestHorizonCommand:
    def test_artifacts(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["horizon", "--config", str(config_path), "--out", str(out)]) == 0

        _, header, rows = _read_csv(out / "horizon_convergence.csv")
        assert header == ["theta", "sup_gap"]
        assert [float(r[0]) for r in rows] == [4.0, 32.0]
        # normalized pareto maxima hit the limit law exactly
        assert all(float(r[1]) <= 1e-12 for r in rows)

        _, header, rows = _read_csv(out / "horizon_diagnostic.csv")
        assert header == ["theta", "sup_ratio", "leading_term_error"]
        assert all(float(r[1]) == 0.0 for r in rows)

        sim = json.loads((out / "horizon_simulation.json").read_text())
        assert sim["theta"] == 20.0
        assert sim["n"] == 20000
        assert sim["offer_rate"] >= 0.999
        assert sim["diagnostic"] == "written"
        assert len(sim["thresholds"]) == 5
        for row in sim["thresholds"]:
            assert row["z"] == pytest.approx(
                (row["empirical_cdf"] - row["model_cdf"]) / row["binomial_se"], abs=1e-12
            )
        assert sim["max_abs_z"] <= 3.0

    def test_exponential_family_skips_the_diagnostic(self, tmp_path):
        text = FULL_CONFIG.replace(
            '[offers]\nfamily = "pareto"\ngamma = 0.5\n',
            '[offers]\nfamily = "exponential"\n',
        )
        path = tmp_path / "expo.toml"
        path.write_text(text)
        out = tmp_path / "art"
        assert main(["horizon", "--config", str(path), "--out", str(out)]) == 0
        assert not (out / "horizon_diagnostic.csv").exists()
        sim = json.loads((out / "horizon_simulation.json").read_text())
        assert sim["diagnostic"].startswith("skipped")

    def test_horizon_needs_theta(self, tmp_path, capsys):
        text = FULL_CONFIG.replace("theta = [4.0, 32.0]\n", "")
        path = tmp_path / "notheta.toml"
        path.write_text(text)
        rc = main(["horizon", "--config", str(path), "--out", str(tmp_path / "art")])
        assert rc == 2
        assert "theta" in _stderr_error(capsys)["message"]

    def test_horizon_needs_offers(self, tmp_path, capsys):
        text = FULL_CONFIG.replace('[offers]\nfamily = "pareto"\ngamma = 0.5\n', "")
        path = tmp_path / "nooffers.toml"
        path.write_text(text)
        rc = main(["horizon", "--config", str(path), "--out", str(tmp_path / "art")])
        assert rc == 2
        assert "offers" in _stderr_error(capsys)["message"]


class TestCertifyCommand:
    def test_batch_with_regime_slot(self, config_path, tmp_path):
        out = tmp_path / "art"
        assert main(["certify", "--config", str(config_path), "--out", str(out)]) == 0
        _, header, rows = _read_csv(out / "certify.csv")
        assert header == [
            "gamma", "p", "seed", "lhs", "metric", "constant", "bound", "slack", "passed",
        ]
        # 3 gammas x 2 ps minus the (0.6, 2.0) regime failure, 3 pairs each
        assert len(rows) == 15
        assert all(r[8] == "true" for r in rows)
        summary = json.loads((out / "certify_summary.json").read_text())
        assert summary["total"] == 15
        assert summary["failures"] == 0
        assert summary["all_passed"] is True
        assert len(summary["regime_errors"]) == 1
        assert summary["regime_errors"][0]["gamma"] == 0.6
        assert summary["regime_errors"][0]["p"] == 2.0


class TestErrorReporting:
    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["law", "--config", str(tmp_path / "ghost.toml")])
        assert rc == 2
        error = _stderr_error(capsys)
        assert error["type"] == "ConfigError"
        assert "cannot read config" in error["message"]

    def test_bad_toml_reports_position(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text('scenario = "x"\ngamma = @\np = 1.0\n')
        rc = main(["law", "--config", str(path)])
        assert rc == 2
        assert "line 2" in _stderr_error(capsys)["message"]

    def test_unknown_distribution_lists_defined_names(self, config_path, tmp_path, capsys):
        text = FULL_CONFIG.replace('mixing = "f0"', 'mixing = "ghost"', 1)
        path = tmp_path / "unk.toml"
        path.write_text(text)
        rc = main(["law", "--config", str(path), "--out", str(tmp_path / "art")])
        assert rc == 2
        message = _stderr_error(capsys)["message"]
        assert "ghost" in message
        assert "'f0'" in message and "'point'" in message

    def test_grid_override_must_be_sane(self, config_path, tmp_path, capsys):
        rc = main([
            "law", "--config", str(config_path), "--out", str(tmp_path / "art"),
            "--grid", "1",
        ])
        assert rc == 2
        assert "grid" in _stderr_error(capsys)["message"]


class TestDeterminism:
    def test_fixed_seed_reproduces_every_byte(self, config_path, tmp_path):
        dirs = [tmp_path / "run_a", tmp_path / "run_b"]
        for out in dirs:
            for argv in (
                ["law", "sample"], ["compare"], ["horizon"], ["certify"],
            ):
                cmd = [argv[0], "--config", str(config_path), "--out", str(out)]
                cmd += argv[1:]
                assert main(cmd) == 0
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name

    def test_seed_override_changes_the_sample(self, config_path, tmp_path):
        outs = []
        for seed in (11, 12):
            out = tmp_path / f"seed_{seed}"
            rc = main([
                "law", "--config", str(config_path), "--out", str(out),
                "--seed", str(seed), "sample",
            ])
            assert rc == 0
            outs.append((out / "law_sample.csv").read_text())
        assert "# seed=11" in outs[0] and "# seed=12" in outs[1]
        assert outs[0].splitlines()[3:] != outs[1].splitlines()[3:]


class TestConsoleScript:
    def test_entry_point_runs(self, config_path, tmp_path):
        exe = shutil.which("hevlab")
        assert exe is not None, "console script not on PATH"
        out = tmp_path / "art"
        proc = subprocess.run(
            [exe, "law", "--config", str(config_path), "--out", str(out)],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "law_cdf.csv").exists()
