"""Shared fixtures: built-in scenarios are simulated once per session."""

import time

import pytest

from apfguard import scenario_io, sim


class ScenarioRun:
    def __init__(self, name, config, records, metrics, runtime_s):
        self.name = name
        self.config = config
        self.records = records
        self.metrics = metrics
        self.runtime_s = runtime_s


def _run(name, mutate=None):
    config = scenario_io.builtin(name)
    if mutate:
        mutate(config)
    start = time.perf_counter()
    records, metrics = sim.run(config)
    return ScenarioRun(name, config, records, metrics, time.perf_counter() - start)


@pytest.fixture(scope="session")
def head_on_run():
    return _run("head_on")


@pytest.fixture(scope="session")
def converge_left_run():
    def mutate(config):
        config.options.arrival_tol = 0.5

    return _run("converge_left", mutate)


@pytest.fixture(scope="session")
def parallel_v_run():
    return _run("parallel_v")


@pytest.fixture(scope="session")
def parallel_v_no_combine_run():
    return _run("parallel_v_no_combine")


@pytest.fixture(scope="session")
def nonparallel_4_run():
    return _run("nonparallel_4")


@pytest.fixture(scope="session")
def super_41_run():
    return _run("super_41")


@pytest.fixture(scope="session")
def pursuer_run():
    return _run("pursuer_demo")
