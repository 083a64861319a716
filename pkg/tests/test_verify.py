"""The numeric oracle suite itself."""

import dataclasses

import pytest

from apfguard import verify
from apfguard.errors import InvalidArgumentError
from apfguard.verify import ALL_CHECKS, DEFAULT_SEED, OracleResult, run_all


@pytest.fixture(scope="module")
def default_results():
    return run_all(seed=DEFAULT_SEED)


class TestOracleResult:
    def test_grade_consistency(self):
        ok = OracleResult.grade("x", 10, 0.5, 1.0, 1)
        assert ok.passed
        bad = OracleResult.grade("x", 10, 1.5, 1.0, 1)
        assert not bad.passed
        boundary = OracleResult.grade("x", 10, 1.0, 1.0, 1)
        assert boundary.passed  # pass iff worst <= tolerance


class TestSuite:
    def test_all_pass_with_default_seed(self, default_results):
        assert [r.name for r in default_results] == list(ALL_CHECKS)
        for r in default_results:
            assert r.passed, f"{r.name}: worst {r.worst_violation} > {r.tolerance}"
            assert r.passed == (r.worst_violation <= r.tolerance)
            assert r.seed == DEFAULT_SEED
            assert r.trials > 0

    def test_deterministic_given_seed(self, default_results):
        again = verify.check_speed_bound(seed=DEFAULT_SEED)
        reference = next(r for r in default_results if r.name == "speed_bound")
        assert again == reference

    def test_seed_changes_sampling(self):
        a = verify.check_speed_bound(seed=1)
        b = verify.check_speed_bound(seed=2)
        assert a.worst_violation != b.worst_violation
        assert a.passed and b.passed

    def test_only_filter(self):
        results = run_all(only="eigen")
        assert [r.name for r in results] == ["eigen_lemma"]

    def test_tolerance_override_can_fail(self, default_results):
        speed = next(r for r in default_results if r.name == "speed_bound")
        squeezed = run_all(only="speed", tolerances={"speed_bound": speed.worst_violation - 1.0})
        assert not squeezed[0].passed
        assert squeezed[0].worst_violation == speed.worst_violation

    def test_invalid_trials(self):
        with pytest.raises(InvalidArgumentError):
            verify.check_speed_bound(trials=0)


class TestIndividualOracles:
    def test_speed_bound_reports_tight_worst(self, default_results):
        r = next(x for x in default_results if x.name == "speed_bound")
        # trials start exactly at the bound, so the worst violation is a small
        # negative number, not a large slack
        assert -1.0 < r.worst_violation <= r.tolerance

    def test_filtered_separation_includes_equality_case(self, default_results):
        r = next(x for x in default_results if x.name == "filtered_separation")
        # the equality construction pins the worst violation near zero
        assert abs(r.worst_violation) < 1e-6

    def test_line_integral_close(self, default_results):
        r = next(x for x in default_results if x.name == "line_integral")
        assert r.worst_violation < 1e-6

    def test_angle_convergence_margins(self, default_results):
        r = next(x for x in default_results if x.name == "angle_convergence")
        assert r.worst_violation <= 0.0  # >= 99% converged and perturbation departed

    def test_eigen_lemma_strict(self, default_results):
        r = next(x for x in default_results if x.name == "eigen_lemma")
        assert r.trials == 100000
        assert r.worst_violation < 0.0  # strictly below rho is never observed

    def test_gradient_fd(self, default_results):
        r = next(x for x in default_results if x.name == "gradient_fd")
        assert r.worst_violation < 1e-4


def test_results_are_frozen(default_results):
    with pytest.raises(dataclasses.FrozenInstanceError):
        default_results[0].passed = False
