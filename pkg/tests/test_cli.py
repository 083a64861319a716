"""Command-line interface: exit codes, output files, determinism."""

import json
import subprocess
import sys

import pytest

from apfguard import cli, scenario_io


def run_cli(*argv):
    return cli.main(list(argv))


class TestRun:
    def test_head_on_writes_outputs(self, tmp_path, capsys):
        code = run_cli("run", "--scenario", "head_on", "--t-end", "5", "--out", str(tmp_path))
        out = capsys.readouterr().out
        assert code == 0
        assert (tmp_path / "trace.csv").exists()
        assert (tmp_path / "trace.meta.json").exists()
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["min_filtered_margin"] > 0.0
        assert "assumption report:" in out
        assert "metrics:" in out

    def test_meta_sidecar_contents(self, tmp_path):
        run_cli("run", "--scenario", "head_on", "--t-end", "2", "--out", str(tmp_path))
        meta = json.loads((tmp_path / "trace.meta.json").read_text())
        assert meta["r_s"] == [5.0]
        assert meta["r_a"] == [7.5]
        assert meta["obstacles"][0]["r_o"] == 10.0
        assert meta["obstacles"][0]["behavior"] == "constant_velocity"
        assert meta["waypoints"] == [[0.0, 0.0]]

    def test_out_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
        assert run_cli("run", "--scenario", "head_on", "--t-end", "2") == 0
        assert (tmp_path / "trace.csv").exists()

    def test_unknown_scenario(self, tmp_path, capsys):
        code = run_cli("run", "--scenario", "nosuch", "--out", str(tmp_path))
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_pursuer_conflict_exit_code(self, tmp_path):
        code = run_cli(
            "run",
            "--scenario",
            "pursuer_demo",
            "--override",
            "obstacle.v_o_max=9",
            "--out",
            str(tmp_path),
        )
        assert code == 2
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["conflict_events"]
        assert metrics["min_filtered_margin"] < 0.0

    def test_scenario_file(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text(scenario_io.save(scenario_io.builtin("head_on")))
        assert run_cli("run", "--scenario", str(path), "--t-end", "2", "--out", str(tmp_path)) == 0

    def test_determinism_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert (
                run_cli(
                    "run", "--scenario", "converge_left", "--t-end", "10", "--out", str(out)
                )
                == 0
            )
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()


class TestOverrides:
    def test_unknown_key_rejected(self, tmp_path):
        code = run_cli(
            "run", "--scenario", "head_on", "--override", "warp=9", "--out", str(tmp_path)
        )
        assert code == 1

    def test_bad_value_rejected(self, tmp_path):
        code = run_cli(
            "run", "--scenario", "head_on", "--override", "vehicle.v_m=abc", "--out", str(tmp_path)
        )
        assert code == 1

    def test_guidance_override_changes_trace(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("run", "--scenario", "head_on", "--t-end", "5", "--out", str(a))
        run_cli(
            "run",
            "--scenario",
            "head_on",
            "--t-end",
            "5",
            "--override",
            "guidance.eps=1e-2",
            "--out",
            str(b),
        )
        assert (a / "trace.csv").read_bytes() != (b / "trace.csv").read_bytes()

    def test_options_override(self, tmp_path):
        code = run_cli(
            "run",
            "--scenario",
            "converge_left",
            "--t-end",
            "5",
            "--override",
            "options.arrival_tol=0.5",
            "--out",
            str(tmp_path),
        )
        assert code == 0

    def test_malformed_override(self, tmp_path):
        assert (
            run_cli("run", "--scenario", "head_on", "--override", "dt", "--out", str(tmp_path))
            == 1
        )


class TestVerify:
    def test_only_filter_single_row(self, capsys):
        assert run_cli("verify", "--only", "eigen") == 0
        out = capsys.readouterr().out
        rows = [line for line in out.splitlines() if line.startswith("eigen_lemma")]
        assert len(rows) == 1
        assert "pass" in rows[0]

    def test_tolerance_override_fails(self, capsys):
        assert run_cli("verify", "--only", "eigen", "--tolerance", "eigen_lemma=-1") == 1
        assert "FAIL" in capsys.readouterr().out

    def test_unknown_oracle_name(self, capsys):
        assert run_cli("verify", "--tolerance", "warp_core=1") == 1
        assert "unknown oracle" in capsys.readouterr().err

    def test_no_match(self, capsys):
        assert run_cli("verify", "--only", "zzz") == 1


class TestListAndSweep:
    def test_list(self, capsys):
        assert run_cli("list") == 0
        assert capsys.readouterr().out.split() == list(scenario_io.BUILTIN_NAMES)

    def test_sweep_head_on(self, tmp_path, capsys):
        code = run_cli("sweep", "--scenario", "head_on", "--t-end", "10", "--out", str(tmp_path))
        out = capsys.readouterr().out
        # eps = 1e-2 flattens the barrier enough that the obstacle plows
        # through, so the sweep as a whole reports a conflict
        assert code == 2
        assert "min_filtered_margin" in out
        # gamma = 1.5 collapses this geometry's window; reported, not fatal
        assert out.count("invalid-window") == 3
        lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
        assert lines[0] == "eps,gamma,min_filtered_margin,arrival_time,conflicts"
        assert len(lines) == 1 + 9
        ran = [line.split(",") for line in lines[1:] if not line.endswith(",,,")]
        assert len(ran) == 6
        for eps, _gamma, margin, _arrival, conflicts in ran:
            if float(eps) <= 1e-3:
                assert conflicts == "0" and float(margin) > 0.0
            else:
                assert conflicts == "1" and float(margin) < 0.0


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "apfguard.cli", "list"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "head_on" in proc.stdout
