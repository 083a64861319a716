"""Traces are produced by invoking the simulator CLI, never by importing it."""

import subprocess
import sys

import pytest


def _generate(name, out_dir, extra=()):
    cmd = [
        sys.executable,
        "-m",
        "apfguard.cli",
        "run",
        "--scenario",
        name,
        "--out",
        str(out_dir),
        *extra,
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    # 0 = conflict-free, 2 = conflicts occurred; both still write the trace
    assert proc.returncode in (0, 2), proc.stderr
    return out_dir / "trace.csv"


@pytest.fixture(scope="session")
def head_on_trace(tmp_path_factory):
    return _generate("head_on", tmp_path_factory.mktemp("head_on"))


@pytest.fixture(scope="session")
def converge_left_trace(tmp_path_factory):
    return _generate("converge_left", tmp_path_factory.mktemp("converge_left"))


@pytest.fixture(scope="session")
def super_41_trace(tmp_path_factory):
    return _generate("super_41", tmp_path_factory.mktemp("super_41"), ("--t-end", "10"))
