"""Tests for the command-line front-end."""

import json
import tempfile
from pathlib import Path

import pandas as pd
import pytest

from quantum_friction_lab.errors import EXIT_OK, EXIT_UNSTABLE, EXIT_USAGE
from quantum_friction_lab.main import PRESETS, build_parser, main, resolve_config


@pytest.fixture(autouse=True)
def runtime_env(monkeypatch):
    monkeypatch.setenv("QFL_WORKERS", "1")
    monkeypatch.setenv("QFL_LOG_FORMAT", "text")
    monkeypatch.setenv("QFL_LOG_LEVEL", "WARNING")


def test_parser_flags():
    """Test that flags map onto RunConfig fields and unset flags stay None."""
    args = build_parser().parse_args(
        ["force", "--gamma", "0.2", "--values", "0.2", "0.3", "--parquet", "--parameter", "gamma"]
    )
    assert args.command == "force"
    assert args.gamma == 0.2
    assert args.values == [0.2, 0.3]
    assert args.parquet is True
    assert args.quick is None
    assert args.L is None


def test_parser_usage_error_exit_code():
    """Test that argument errors exit with the usage code."""
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["friction"])
    assert excinfo.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["force", "--parameter", "temperature"])
    assert excinfo.value.code == EXIT_USAGE


def test_resolve_config_uses_preset():
    """Test that presets fill in what the command line leaves out."""
    run = resolve_config(build_parser().parse_args(["spectrum", "--gamma", "0.25"]))
    assert run.gamma == 0.25
    assert run.omega_max == PRESETS["spectrum"]["omega_max"]
    assert run.n_kx == PRESETS["spectrum"]["n_kx"]


def test_roots_command():
    """Test a small root-locus run with its CSV and sidecar."""
    with tempfile.TemporaryDirectory() as tmpdir:
        args = ["--gamma", "0.3", "--kx-min", "0.1", "--kx-max", "5", "--n-kx", "20"]
        code = main(["roots", *args, "--output-dir", tmpdir])
        assert code == EXIT_OK
        frame = pd.read_csv(Path(tmpdir) / "roots_gamma0.3.csv")
        assert len(frame) == 80
        assert list(frame.columns)[-1] == "status"
        assert sorted(frame["branch"].unique()) == [0, 1, 2, 3]
        sidecar = json.loads((Path(tmpdir) / "roots_gamma0.3.json").read_text())
        assert sidecar["command"] == "roots"
        assert sidecar["run_config"]["gamma"] == 0.3


def test_empty_kx_range_is_usage_error():
    """Test that an empty kx range exits with the usage code."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["roots", "--kx-min", "5", "--kx-max", "1", "--output-dir", tmpdir])
        assert code == EXIT_USAGE
        assert list(Path(tmpdir).iterdir()) == []


def test_bad_environment_is_usage_error(monkeypatch):
    """Test that malformed runtime settings exit with the usage code."""
    monkeypatch.setenv("QFL_WORKERS", "-2")
    assert main(["verify", "--only", "khi"]) == EXIT_USAGE


def test_spectrum_refuses_unstable_configuration():
    """Test the unstable-regime exit code."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["spectrum", "--gamma", "0.1", "--output-dir", tmpdir])
        assert code == EXIT_UNSTABLE
        assert not (Path(tmpdir) / "spectrum.csv").exists()


def test_spectrum_command():
    """Test a coarse spectral density grid."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["spectrum", "--n-kx", "9", "--n-omega", "11", "--output-dir", tmpdir])
        assert code == EXIT_OK
        frame = pd.read_csv(Path(tmpdir) / "spectrum.csv")
        assert len(frame) == 99
        assert set(frame["status"]) <= {"window", "outside"}
        assert (frame.loc[frame["status"] == "outside", "density [hbar k_p]"] == 0).all()


def test_force_command_marks_unstable_points():
    """Test that unstable sweep values are reported in-band with exit code 0."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["force", "--values", "0.1", "0.05", "--output-dir", tmpdir])
        assert code == EXIT_OK
        frame = pd.read_csv(Path(tmpdir) / "force_gamma.csv")
        assert list(frame["status"]) == ["unstable-rejected", "unstable-rejected"]
        assert frame["F [hbar omega_p k_p^3]"].isna().all()


def test_verify_command(capsys):
    """Test the verification report on stdout and in verify.json."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["verify", "--only", "khi", "rotation", "--quick", "--output-dir", tmpdir])
        assert code == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert printed["passed"] is True
        assert [s["name"] for s in printed["suites"]] == ["rotation", "khi"]
        document = json.loads((Path(tmpdir) / "verify.json").read_text())
        assert document["command"] == "verify"
        assert document["report"]["seed"] == 12345


def test_config_replay_from_sidecar():
    """Test that a sidecar reproduces the run it came from."""
    with tempfile.TemporaryDirectory() as tmpdir:
        first = Path(tmpdir) / "first"
        second = Path(tmpdir) / "second"
        args = ["--gamma", "0.3", "--kx-min", "0.5", "--kx-max", "2", "--n-kx", "5"]
        assert main(["roots", *args, "--output-dir", str(first)]) == EXIT_OK
        sidecar = first / "roots_gamma0.3.json"
        code = main(["roots", "--config", str(sidecar), "--output-dir", str(second)])
        assert code == EXIT_OK
        assert (first / "roots_gamma0.3.csv").read_bytes() == (
            second / "roots_gamma0.3.csv"
        ).read_bytes()


@pytest.mark.slow
def test_critical_command(capsys):
    """Test the critical damping at v = 0.1, L = 0.1."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["critical", "--output-dir", tmpdir])
        assert code == EXIT_OK
        printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert printed["parameter"] == "gamma"
        assert printed["value"] == pytest.approx(0.18, abs=0.01)


def test_diagram_rejects_nonpositive_velocity():
    """Test that a non-positive diagram velocity exits with the usage code."""
    with tempfile.TemporaryDirectory() as tmpdir:
        code = main(["diagram", "--velocities", "-0.1", "--gaps", "0.1", "--output-dir", tmpdir])
        assert code == EXIT_USAGE
        assert not (Path(tmpdir) / "diagram.csv").exists()


@pytest.mark.slow
def test_diagram_command_resumes_from_journal():
    """Test a 2x2 diagram rerun from a partial journal reproduces the CSV bytes."""
    args = ["diagram", "--velocities", "0.02", "0.1", "--gaps", "0.1", "0.5"]
    with tempfile.TemporaryDirectory() as tmpdir:
        first = Path(tmpdir) / "first"
        second = Path(tmpdir) / "second"
        assert main([*args, "--output-dir", str(first)]) == EXIT_OK

        frame = pd.read_csv(first / "diagram.csv")
        assert len(frame) == 4
        assert list(frame.columns) == [
            "L [1/k_p]",
            "v [c]",
            "gamma_cr [omega_p]",
            "gamma_cr_estimate [omega_p]",
            "status",
        ]
        cells = frame.set_index(["L [1/k_p]", "v [c]"])
        assert cells.loc[(0.5, 0.02), "status"] == "no-sign-change"
        assert cells.loc[(0.5, 0.02), "gamma_cr [omega_p]"] == 0.0
        assert cells.loc[(0.1, 0.1), "status"] == "ok"
        assert cells.loc[(0.1, 0.1), "gamma_cr [omega_p]"] == pytest.approx(0.18, abs=0.01)
        assert (frame["gamma_cr_estimate [omega_p]"] > 0).all()
        assert (first / "diagram_cut_velocity.csv").exists()
        assert (first / "diagram_cut_gap.csv").exists()

        journal = (first / "diagram.journal.jsonl").read_text().splitlines()
        assert len(journal) == 5
        second.mkdir()
        (second / "diagram.journal.jsonl").write_text("\n".join(journal[:3]) + "\n")
        assert main([*args, "--output-dir", str(second)]) == EXIT_OK
        assert len((second / "diagram.journal.jsonl").read_text().splitlines()) == 5
        assert (second / "diagram.csv").read_bytes() == (first / "diagram.csv").read_bytes()

        # a complete journal leaves nothing to compute
        assert main([*args, "--output-dir", str(first)]) == EXIT_OK
        assert len((first / "diagram.journal.jsonl").read_text().splitlines()) == 5
        assert (first / "diagram.csv").read_bytes() == (second / "diagram.csv").read_bytes()
