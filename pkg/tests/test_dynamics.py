"""Exact integration, obstacle behaviors, and error bookkeeping."""

import math

import numpy as np
import pytest

from apfguard.dynamics import (
    CONSTANT_VELOCITY,
    MulticopterState,
    Obstacle,
    PursuerBehavior,
    ScriptedBehavior,
    VehicleParams,
    approach_angle,
    compute_errors,
    filtered_position,
    step_multicopter,
    step_multicopter_rk4,
    step_obstacle,
    velocity_margin_radius,
)
from apfguard.errors import DegenerateGeometryError, InvalidArgumentError
from apfguard.mathcore import Vec2, saturate

PARAMS = VehicleParams(l=5.0, v_m=6.0, r_s=5.0, r_a=7.5)


class TestVehicleParams:
    def test_radius_ordering_enforced(self):
        with pytest.raises(InvalidArgumentError, match="r_a > r_s"):
            VehicleParams(l=5.0, v_m=6.0, r_s=5.0, r_a=5.0)
        with pytest.raises(InvalidArgumentError):
            VehicleParams(l=5.0, v_m=6.0, r_s=-1.0, r_a=7.5)
        with pytest.raises(InvalidArgumentError):
            VehicleParams(l=0.0, v_m=6.0, r_s=5.0, r_a=7.5)
        with pytest.raises(InvalidArgumentError):
            VehicleParams(l=5.0, v_m=0.0, r_s=5.0, r_a=7.5)


class TestStepMulticopter:
    def test_velocity_equilibrium(self):
        state = MulticopterState(Vec2(0.0, 0.0), Vec2(2.0, 0.0))
        nxt = step_multicopter(state, Vec2(2.0, 0.0), PARAMS, 1.0)
        assert nxt.p.x == pytest.approx(2.0, abs=1e-12)
        assert nxt.p.y == 0.0
        assert nxt.v.x == pytest.approx(2.0, abs=1e-12)

    def test_exponential_decay(self):
        state = MulticopterState(Vec2(0.0, 0.0), Vec2(1.0, 0.0))
        nxt = step_multicopter(state, Vec2(0.0, 0.0), PARAMS, 0.01)
        assert nxt.v.x == pytest.approx(math.exp(-0.05), abs=1e-15)
        assert nxt.v.y == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_rk4_at_fine_step(self, seed):
        rng = np.random.default_rng(seed)
        state = MulticopterState(
            Vec2(*rng.uniform(-10, 10, 2)), Vec2(*(rng.uniform(-1, 1, 2) * 3.0))
        )
        v_c = Vec2(*rng.uniform(-8, 8, 2))
        exact = step_multicopter(state, v_c, PARAMS, 0.01)
        fine = state
        for _ in range(100):
            fine = step_multicopter_rk4(fine, v_c, PARAMS, 0.0001)
        assert abs(exact.p.x - fine.p.x) < 1e-8
        assert abs(exact.p.y - fine.p.y) < 1e-8
        assert abs(exact.v.x - fine.v.x) < 1e-8
        assert abs(exact.v.y - fine.v.y) < 1e-8

    def test_speed_bound_random_commands(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            speed = rng.uniform(0.0, PARAMS.v_m)
            ang = rng.uniform(0.0, 2.0 * math.pi)
            state = MulticopterState(
                Vec2(0.0, 0.0), Vec2(speed * math.cos(ang), speed * math.sin(ang))
            )
            for _ in range(100):
                cmd = Vec2(*rng.uniform(-100, 100, 2))
                state = step_multicopter(state, cmd, PARAMS, 0.01)
                assert state.v.norm() <= PARAMS.v_m + 1e-9

    def test_filtered_position_advances_by_command(self):
        state = MulticopterState(Vec2(3.0, -2.0), Vec2(1.0, 4.0))
        v_c = saturate(Vec2(2.0, -1.0), PARAMS.v_m)
        dt = 0.01
        xi0 = filtered_position(state.p, state.v, PARAMS.l)
        nxt = step_multicopter(state, v_c, PARAMS, dt)
        xi1 = filtered_position(nxt.p, nxt.v, PARAMS.l)
        assert abs(xi1.x - (xi0.x + v_c.x * dt)) < 1e-12
        assert abs(xi1.y - (xi0.y + v_c.y * dt)) < 1e-12
        # finite-difference form of the filtered dynamics
        assert (xi1 - xi0).x / dt == pytest.approx(v_c.x, rel=1e-6)

    def test_bad_dt(self):
        state = MulticopterState(Vec2(0.0, 0.0), Vec2(0.0, 0.0))
        with pytest.raises(InvalidArgumentError):
            step_multicopter(state, Vec2(0.0, 0.0), PARAMS, 0.0)


class TestStepObstacle:
    def test_constant_velocity(self):
        ob = Obstacle(Vec2(30.0, 0.0), Vec2(-5.0, 0.0), 10.0, 5.0)
        nxt = step_obstacle(ob, Vec2(0.0, 0.0), 0.1)
        assert nxt.p_o.x == pytest.approx(29.5, abs=1e-12)
        assert nxt.v_o == ob.v_o
        assert nxt.age == pytest.approx(0.1)

    def test_scripted_with_constant_command_matches_constant_velocity(self):
        v = Vec2(-5.0, 0.0)
        base = Obstacle(Vec2(30.0, 0.0), v, 10.0, 5.0)
        scripted = Obstacle(
            Vec2(30.0, 0.0), v, 10.0, 5.0, behavior=ScriptedBehavior(((0.0, v),))
        )
        a = step_obstacle(base, Vec2(0.0, 0.0), 0.05)
        b = step_obstacle(scripted, Vec2(0.0, 0.0), 0.05, l=5.0)
        # v_o already equals the command, so the ZOH update is a pure translation
        assert abs(a.p_o.x - b.p_o.x) < 1e-12
        assert abs(a.p_o.y - b.p_o.y) < 1e-12
        assert (b.v_o - v).norm() < 1e-12

    def test_scripted_command_schedule(self):
        beh = ScriptedBehavior(((1.0, Vec2(1.0, 0.0)), (2.0, Vec2(0.0, 1.0))))
        fallback = Vec2(-1.0, 0.0)
        assert beh.command_at(0.5, fallback) == fallback
        assert beh.command_at(1.0, fallback) == Vec2(1.0, 0.0)
        assert beh.command_at(2.7, fallback) == Vec2(0.0, 1.0)

    def test_scripted_command_clamped_to_v_o_max(self):
        ob = Obstacle(
            Vec2(0.0, 0.0),
            Vec2(0.0, 0.0),
            5.0,
            2.0,
            behavior=ScriptedBehavior(((0.0, Vec2(100.0, 0.0)),)),
        )
        cur = ob
        for _ in range(2000):
            cur = step_obstacle(cur, Vec2(50.0, 0.0), 0.01, l=5.0)
            assert cur.v_o.norm() <= 2.0 + 1e-9

    def test_pursuer_closes_on_stationary_vehicle(self):
        ob = Obstacle(
            Vec2(10.0, 0.0), Vec2(0.0, 0.0), 5.0, 5.0, behavior=PursuerBehavior(eps1=0.1)
        )
        xi = Vec2(0.0, 0.0)
        d_prev = (filtered_position(ob.p_o, ob.v_o, 5.0) - xi).norm()
        for _ in range(200):
            ob = step_obstacle(ob, xi, 0.01, l=5.0, multicopter_xi_dot=Vec2(0.0, 0.0))
        d_now = (filtered_position(ob.p_o, ob.v_o, 5.0) - xi).norm()
        assert d_now < d_prev

    def test_pursuer_requires_l(self):
        ob = Obstacle(Vec2(10.0, 0.0), Vec2(0.0, 0.0), 5.0, 5.0, behavior=PursuerBehavior(0.1))
        with pytest.raises(InvalidArgumentError):
            step_obstacle(ob, Vec2(0.0, 0.0), 0.01)

    def test_pursuer_coincident_is_degenerate(self):
        ob = Obstacle(Vec2(1.0, 0.0), Vec2(0.0, 0.0), 5.0, 5.0, behavior=PursuerBehavior(0.1))
        with pytest.raises(DegenerateGeometryError):
            step_obstacle(ob, Vec2(1.0, 0.0), 0.01, l=5.0)

    def test_unknown_behavior_string_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Obstacle(Vec2(0.0, 0.0), Vec2(0.0, 0.0), 1.0, 1.0, behavior="teleport")


class TestErrors:
    def test_filtered_position_examples(self):
        assert filtered_position(Vec2(0.0, 0.0), Vec2(0.0, 0.0), 5.0) == Vec2(0.0, 0.0)
        assert filtered_position(Vec2(0.0, 0.0), Vec2(5.0, 0.0), 5.0) == Vec2(1.0, 0.0)
        with pytest.raises(InvalidArgumentError):
            filtered_position(Vec2(0.0, 0.0), Vec2(0.0, 0.0), 0.0)

    def test_compute_errors_at_waypoint(self):
        m = MulticopterState(Vec2(1.0, 2.0), Vec2(0.0, 0.0))
        ob = Obstacle(Vec2(100.0, 100.0), Vec2(0.0, 1.0), 1.0, 1.0)
        errs = compute_errors(m, ob, Vec2(1.0, 2.0), 5.0)
        assert errs.p_wp_err == Vec2(0.0, 0.0)
        assert errs.xi_wp_err == Vec2(0.0, 0.0)

    def test_compute_errors_arithmetic(self):
        m = MulticopterState(Vec2(0.0, 0.0), Vec2(5.0, 0.0))
        ob = Obstacle(Vec2(10.0, 0.0), Vec2(-5.0, 0.0), 1.0, 5.0)
        errs = compute_errors(m, ob, Vec2(0.0, 0.0), 5.0)
        assert errs.xi_o_err == Vec2(-8.0, 0.0)
        assert errs.p_o_err == Vec2(-10.0, 0.0)
        assert errs.v_o_err == Vec2(10.0, 0.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_error_identities(self, seed):
        rng = np.random.default_rng(seed)
        m = MulticopterState(Vec2(*rng.uniform(-20, 20, 2)), Vec2(*rng.uniform(-5, 5, 2)))
        ob = Obstacle(Vec2(*rng.uniform(-20, 20, 2)), Vec2(*rng.uniform(-5, 5, 2)), 2.0, 6.0)
        wp = Vec2(*rng.uniform(-20, 20, 2))
        l = 5.0
        errs = compute_errors(m, ob, wp, l)
        xi_o = filtered_position(ob.p_o, ob.v_o, l)
        assert (errs.xi_o_err - (errs.xi - xi_o)).norm() < 1e-12
        assert (errs.xi_o_err - (errs.p_o_err + errs.v_o_err / l)).norm() < 1e-12
        assert (errs.xi_wp_err - (errs.xi - wp)).norm() < 1e-12


class TestMarginsAndAngles:
    def test_velocity_margin_radius(self):
        assert velocity_margin_radius(6.0, 5.0, 5.0) == pytest.approx(2.2, abs=1e-12)
        assert velocity_margin_radius(6.0, 0.0, 5.0) == pytest.approx(1.2, abs=1e-12)
        assert math.hypot(15.0, velocity_margin_radius(6.0, 5.0, 5.0)) == pytest.approx(
            15.1605, abs=1e-4
        )
        with pytest.raises(InvalidArgumentError):
            velocity_margin_radius(0.0, 5.0, 5.0)
        with pytest.raises(InvalidArgumentError):
            velocity_margin_radius(6.0, -1.0, 5.0)

    @pytest.mark.parametrize(
        "a, b, expected",
        [
            (Vec2(1.0, 0.0), Vec2(2.0, 0.0), 0.0),
            (Vec2(1.0, 0.0), Vec2(-3.0, 0.0), math.pi),
            (Vec2(0.0, 1.0), Vec2(1.0, 0.0), math.pi / 2.0),
        ],
    )
    def test_approach_angle_examples(self, a, b, expected):
        assert approach_angle(a, b) == pytest.approx(expected, abs=1e-12)

    def test_approach_angle_scaling_invariance(self):
        a, b = Vec2(1.0, 2.0), Vec2(-3.0, 0.5)
        base = approach_angle(a, b)
        assert approach_angle(a * 7.0, b) == pytest.approx(base, abs=1e-12)
        assert approach_angle(a, b * 0.001) == pytest.approx(base, abs=1e-9)

    def test_approach_angle_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            approach_angle(Vec2(0.0, 0.0), Vec2(1.0, 0.0))
        with pytest.raises(DegenerateGeometryError):
            approach_angle(Vec2(1.0, 0.0), Vec2(0.0, 0.0))
