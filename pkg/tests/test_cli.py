"""Command-line orchestration: config resolution, exit codes, report files,
determinism, and worker-count invariance."""
import json

import numpy as np
import pytest

from heatsheet import load_sheet
from heatsheet.cli import (COV_TAG, OPS_TAG, ConfigError, RunConfig,
                           build_config, main, make_parser, parse_config_file,
                           suite_drift, suite_seed, write_report)

pytestmark = pytest.mark.filterwarnings("ignore::DeprecationWarning")


def run(argv):
    return main(argv)


def strip_timestamp(text: str) -> str:
    return "\n".join(ln for ln in text.splitlines() if '"timestamp"' not in ln)


class TestRunConfig:
    @pytest.mark.parametrize("kw,msg", [
        (dict(n=4095), "power of two"),
        (dict(n=1), "power of two"),
        (dict(seed=-1), "64 bits"),
        (dict(seed=1 << 64), "64 bits"),
        (dict(t_max=0.0), "tmax must be positive"),
        (dict(dz=0.0), "dz must be positive"),
        (dict(Z=-1.0), "Z must be positive"),
        (dict(replicas=1), "replicas must be at least 2"),
        (dict(nus=()), "nu values must be positive"),
        (dict(nus=(1.0, -2.0)), "nu values must be positive"),
        (dict(tail_tol=0.0), "tail_tol"),
        (dict(tail_tol=1.5), "tail_tol"),
        (dict(workers=0), "workers"),
    ])
    def test_validate_rejects(self, kw, msg):
        with pytest.raises(ConfigError, match=msg):
            RunConfig(**kw).validate()

    def test_defaults_are_valid(self):
        RunConfig().validate()

    def test_suite_seed(self):
        assert suite_seed(RunConfig(seed=0), OPS_TAG) == OPS_TAG
        assert suite_seed(RunConfig(seed=OPS_TAG), OPS_TAG) == 0
        a = suite_seed(RunConfig(seed=5), OPS_TAG)
        b = suite_seed(RunConfig(seed=5), COV_TAG)
        assert a != b


class TestConfigFile:
    def test_parse_key_values(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("# comment\nseed = 7\nn=512   # trailing comment\n\nnu=1,2.5\n")
        assert parse_config_file(p) == {"seed": "7", "n": "512", "nu": "1,2.5"}

    def test_parse_rejects_bare_words(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("seed\n")
        with pytest.raises(ConfigError, match="run.conf:1"):
            parse_config_file(p)

    def args(self, argv):
        return make_parser().parse_args(argv)

    def test_flags_win_over_file(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("seed=5\nn=256\n")
        cfg = build_config(self.args(
            ["verify-ops", "--config", str(p), "--seed", "9"]))
        assert cfg.seed == 9
        assert cfg.n == 256

    def test_nu_list(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("nu=1,2.5\n")
        cfg = build_config(self.args(["verify-drift", "--config", str(p)]))
        assert cfg.nus == (1.0, 2.5)

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("bogus=1\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            build_config(self.args(["verify-ops", "--config", str(p)]))

    def test_bad_value(self, tmp_path):
        p = tmp_path / "run.conf"
        p.write_text("n=twelve\n")
        with pytest.raises(ConfigError, match="bad value"):
            build_config(self.args(["verify-ops", "--config", str(p)]))


class TestExitCodes:
    def test_bad_n_is_config_error(self, tmp_path, capsys):
        rc = run(["verify-ops", "--n", "4095", "--out", str(tmp_path)])
        assert rc == 2
        assert "power of two" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        rc = run(["verify-ops", "--config", str(tmp_path / "nope.conf")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_nu_via_config(self, tmp_path, capsys):
        p = tmp_path / "run.conf"
        p.write_text("nu=-1\n")
        rc = run(["verify-drift", "--config", str(p)])
        assert rc == 2
        assert "nu values" in capsys.readouterr().err

    def test_spde_geometry_error(self, tmp_path, capsys):
        # bump support cannot fit inside (0, 2.5)
        rc = run(["verify-spde", "--tmax", "2.5", "--out", str(tmp_path)])
        assert rc == 2
        assert "support" in capsys.readouterr().err

    def test_evolve_unstable_dz(self, tmp_path, capsys):
        rc = run(["evolve", "--dz", "1.0", "--out", str(tmp_path)])
        assert rc == 2
        assert "stability rule" in capsys.readouterr().err

    def test_degraded_resolution_fails_honestly(self, tmp_path, capsys):
        # at n = 512 the identity-suite refinement targets are unattainable
        rc = run(["verify-ops", "--n", "512", "--out", str(tmp_path)])
        assert rc == 1
        assert "FAIL" in capsys.readouterr().out


@pytest.fixture(scope="module")
def ops_runs(tmp_path_factory):
    outs = []
    for tag in ("a", "b"):
        d = tmp_path_factory.mktemp(f"ops_{tag}")
        rc = main(["verify-ops", "--out", str(d)])
        outs.append((rc, d / "ops_report.json"))
    return outs


class TestReports:
    def test_ops_passes_at_defaults(self, ops_runs, capsys):
        assert ops_runs[0][0] == 0

    def test_report_schema(self, ops_runs):
        doc = json.loads(ops_runs[0][1].read_text())
        assert doc["suite"] == "ops"
        assert set(doc) == {"suite", "timestamp", "config", "reports"}
        assert doc["config"]["seed"] == 0
        assert doc["reports"]
        for rep in doc["reports"]:
            assert {"statistic", "estimate", "target", "rule",
                    "pass", "seed"} <= set(rep)
            assert "passed" not in rep
            assert rep["pass"] is True

    def test_byte_identical_reruns(self, ops_runs):
        a = strip_timestamp(ops_runs[0][1].read_text())
        b = strip_timestamp(ops_runs[1][1].read_text())
        assert a == b

    def test_write_report_roundtrip(self, tmp_path):
        from heatsheet.stats import residual_report
        rep = residual_report("example residual", 0.5, 1.0)
        path = tmp_path / "r.json"
        write_report(str(path), "ops", RunConfig(), [rep])
        doc = json.loads(path.read_text())
        assert doc["reports"][0]["pass"] is True
        assert doc["reports"][0]["statistic"] == "example residual"


class TestWorkerInvariance:
    def test_drift_reports_identical(self):
        # verdicts and numbers must not depend on the worker count
        base = dict(t_max=4.0, replicas=100)
        r1 = suite_drift(RunConfig(workers=1, **base))
        r3 = suite_drift(RunConfig(workers=3, **base))
        assert len(r1) == len(r3)
        for a, b in zip(r1, r3):
            da, db = a.to_dict(), b.to_dict()
            assert da == db


class TestEvolveArtifacts:
    def test_files_written(self, tmp_path):
        rc = run(["evolve", "--tmax", "8", "--n", "256", "--replicas", "100",
                  "--Z", "0.2", "--out", str(tmp_path)])
        assert rc == 0
        traj = (tmp_path / "trajectory.csv").read_text()
        header = traj.splitlines()[0].split(",")
        assert header[0] == "z"
        assert any(c.startswith("u_h") for c in header)
        holder = load_sheet(tmp_path / "final_state.bin")
        assert holder.increments.shape == (2, 256)
        assert np.all(np.isfinite(holder.increments))
        doc = json.loads((tmp_path / "evolve_report.json").read_text())
        assert doc["suite"] == "evolve"
        assert all(r["pass"] for r in doc["reports"])


if __name__ == "__main__":
    pytest.main([__file__])
