"""
End-to-end tests of the command-line entry point.
"""

import json

import pytest

from main import build_parser, main
from services.field_io import write_snapshot

SMALL_RUN = """
[grid]
n = 2
points_per_dim = 16

[solver]
dt = 0.01
horizon = 0.04

[data]
seed = 3
amplitude = 1e-2

[experiment]
amplitude = 1e-2
"""


def error_payload(err: str) -> dict:
    """The JSON error document printed after any log lines."""
    return json.loads(err[err.index("{\n"):])


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("BESOV_DH_SEED", "BESOV_DH_OUTPUT_DIR", "LOG_FILE", "DATABASE_URL"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SMALL_RUN)
    return path


@pytest.fixture
def snapshot(tmp_path, random_field):
    return write_snapshot(tmp_path / "field.dhf1", random_field)


class TestParser:
    def test_global_options_after_subcommand(self):
        args = build_parser().parse_args(["norm", "--input", "f.dhf1", "--s", "0", "--p", "2", "--q", "inf",
                                          "--seed", "4", "--output", "out"])
        assert args.seed == 4
        assert args.output == "out"
        assert args.q == float("inf")

    def test_unknown_command_exits_with_usage(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["nonsense"])
        assert exc_info.value.code == 2


class TestFieldCommands:
    """norm and decompose on DHF1 snapshots."""

    def test_norm(self, tmp_path, snapshot, capsys):
        out = tmp_path / "reports"
        code = main(["norm", "--input", str(snapshot), "--s", "0", "--p", "2", "--q", "2", "--output", str(out)])
        assert code == 0
        report = json.loads((out / "norm_field.json").read_text())
        assert report["norm"] > 0
        assert (out / "norm_field.csv").exists()
        assert (out / "norm_field.meta.json").exists()
        assert json.loads(capsys.readouterr().out) == report

    def test_norm_is_byte_identical_across_runs(self, tmp_path, snapshot):
        for name in ("a", "b"):
            main(["norm", "--input", str(snapshot), "--s", "-0.5", "--p", "2", "--q", "inf",
                  "--output", str(tmp_path / name)])
        assert (tmp_path / "a" / "norm_field.json").read_bytes() == (tmp_path / "b" / "norm_field.json").read_bytes()

    def test_decompose_writes_blocks(self, tmp_path, snapshot):
        out = tmp_path / "reports"
        assert main(["decompose", "--input", str(snapshot), "--blocks", "--output", str(out)]) == 0
        payload = json.loads((out / "decompose_field.json").read_text())
        assert payload["block_files"]
        assert len(list(out.glob("field_block_*.dhf1"))) == len(payload["blocks"])

    def test_bad_snapshot_exits_with_usage(self, tmp_path, capsys):
        bad = tmp_path / "bad.dhf1"
        bad.write_bytes(b"nope")
        code = main(["norm", "--input", str(bad), "--s", "0", "--p", "2", "--q", "2", "--output", str(tmp_path)])
        assert code == 2
        assert error_payload(capsys.readouterr().err)["error"] == "Snapshot Format Error"

    def test_missing_snapshot_exits_with_usage(self, tmp_path):
        code = main(["norm", "--input", str(tmp_path / "absent.dhf1"), "--s", "0", "--p", "2", "--q", "2",
                     "--output", str(tmp_path)])
        assert code == 2


class TestSolverCommands:
    """evolve and picard driven by a config file."""

    def test_evolve(self, tmp_path, config_file):
        out = tmp_path / "reports"
        assert main(["--config", str(config_file), "--output", str(out), "evolve", "--export"]) == 0
        payload = json.loads((out / "evolve.json").read_text())
        assert payload["steps"] == 4
        assert payload["max_charge_drift"] < 1e-14
        assert (out / "trajectory" / "index.json").exists()

    def test_picard(self, tmp_path, config_file):
        out = tmp_path / "reports"
        assert main(["--config", str(config_file), "--output", str(out), "picard", "--c0", "1.0"]) == 0
        report = json.loads((out / "picard.json").read_text())
        assert report["converged"] is True
        assert report["constant_c0"] == 1.0
        meta = json.loads((out / "picard.meta.json").read_text())
        assert len(meta["iterate_wall_times"]) == report["iterations"]

    def test_plot_flag_writes_svg(self, tmp_path, config_file):
        out = tmp_path / "reports"
        assert main(["--config", str(config_file), "--output", str(out), "--plot", "evolve"]) == 0
        assert (out / "evolve.svg").exists()

    def test_bad_config_exits_with_usage(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[solver]\ndt = -1\n")
        assert main(["--config", str(path), "evolve"]) == 2
        error = error_payload(capsys.readouterr().err)
        assert error["details"]["line"] == 2


class TestExperimentCommands:
    def test_equivariance_passes(self, tmp_path, config_file):
        out = tmp_path / "reports"
        code = main(["--config", str(config_file), "--output", str(out), "experiment", "--kind", "equivariance"])
        assert code == 0
        verdict = json.loads((out / "experiment_equivariance.json").read_text())
        assert verdict["passed"] is True
        assert verdict["spec"]["seed"] == 3
        assert "series" not in verdict
        assert (out / "experiment_equivariance.csv").exists()

    def test_seed_flag_overrides_config(self, tmp_path, config_file):
        out = tmp_path / "reports"
        main(["--config", str(config_file), "--output", str(out), "--seed", "9", "experiment", "--kind", "equivariance"])
        verdict = json.loads((out / "experiment_equivariance.json").read_text())
        assert verdict["spec"]["seed"] == 9

    def test_missing_kind_exits_with_usage(self, tmp_path, config_file):
        assert main(["--config", str(config_file), "--output", str(tmp_path), "experiment"]) == 2

    def test_refused_experiment_exits_with_failure(self, tmp_path, capsys):
        path = tmp_path / "refuse.ini"
        path.write_text("[grid]\npoints_per_dim = 32\n[experiment]\nkind = self_similar\namplitude = 1000\n"
                        "constants = C0=10, C1=10\n")
        assert main(["--config", str(path), "--output", str(tmp_path), "experiment"]) == 1
        assert error_payload(capsys.readouterr().err)["error"] == "Experiment Refused"

    def test_audit_with_store(self, tmp_path, config_file, monkeypatch):
        monkeypatch.setenv("DATABASE_URL", f"sqlite:///{tmp_path / 'constants.db'}")
        with config_file.open("a") as handle:
            handle.write("\n[output]\nstore = true\n")
        out = tmp_path / "reports"
        code = main(["--config", str(config_file), "--output", str(out), "audit", "--kind", "c0", "--trials", "2"])
        assert code == 0
        report = json.loads((out / "audit_c0.json").read_text())
        assert report["constants"]["C0"] > 0
        assert (tmp_path / "constants.db").exists()
