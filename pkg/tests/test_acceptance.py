"""End-to-end acceptance gate.

Each test checks one headline requirement against a full scenario run and
prints a single PASS/FAIL line (visible with `pytest -s` or on failure).
"""

import json
import time

import numpy as np

from apfguard import cli, verify


def criterion(description, ok):
    print(("PASS" if ok else "FAIL") + f": {description}")
    assert ok, description


def test_head_on_separation_and_no_arrival(head_on_run):
    m = head_on_run.metrics
    ok = (
        m.min_filtered_margin > 0.0  # min ||xi_err|| stays strictly above 15 m
        and m.arrival_times[0] is None  # symmetric geometry never settles
        and head_on_run.runtime_s < 1.0
    )
    criterion(
        "head_on: filtered separation > 15 m throughout, no arrival, runtime < 1 s "
        f"(margin {m.min_filtered_margin:.3f} m, runtime {head_on_run.runtime_s:.2f} s)",
        ok,
    )


def test_converge_left_avoids_and_arrives(converge_left_run):
    m = converge_left_run.metrics
    assert converge_left_run.config.options.arrival_tol == 0.5
    ok = (
        not m.conflict_events
        and m.arrival_time is not None
        and m.arrival_time <= 60.0
        and converge_left_run.runtime_s < 1.0
    )
    arrival = "none" if m.arrival_time is None else f"{m.arrival_time:.2f}"
    criterion(
        "converge_left: conflict-free, within 0.5 m of the waypoint (held 1 s) "
        f"by 60 s (arrival {arrival} s, runtime {converge_left_run.runtime_s:.2f} s)",
        ok,
    )


def test_parallel_group_combination(parallel_v_run, parallel_v_no_combine_run):
    on = parallel_v_run
    thresholds = np.array(
        [on.config.vehicles[0].params.r_s + ob.r_o for ob in on.config.obstacles]
    )
    min_dxi = np.min(np.stack([rec.dxi[0] for rec in on.records]), axis=0)
    margins = min_dxi - thresholds
    arrived = on.metrics.arrival_time is not None and on.metrics.arrival_time <= 100.0
    ok_on = bool(np.all(margins > 0.0)) and arrived
    arrival = "none" if on.metrics.arrival_time is None else f"{on.metrics.arrival_time:.2f}"
    criterion(
        "parallel_v (combination on): clear of every individual obstacle and arrived "
        f"by 100 s (worst margin {margins.min():.3f} m, arrival {arrival} s)",
        ok_on,
    )

    off = parallel_v_no_combine_run
    at_20 = next(rec for rec in off.records if abs(rec.t - 20.0) < 1e-9)
    ok_off = float(at_20.dwp[0]) > off.config.options.arrival_tol and (
        off.metrics.arrival_time is None or off.metrics.arrival_time > 20.0
    )
    criterion(
        "parallel_v (combination off): dragged away, not arrived by 20 s "
        f"(waypoint distance {float(at_20.dwp[0]):.2f} m at t=20)",
        ok_off,
    )


def test_nonparallel_four_obstacles(nonparallel_4_run):
    m = nonparallel_4_run.metrics
    ok = not m.conflict_events and m.arrival_time is not None and m.arrival_time <= 100.0
    arrival = "none" if m.arrival_time is None else f"{m.arrival_time:.2f}"
    criterion(
        "nonparallel_4: conflict-free and arrived by 100 s "
        f"(margin {m.min_filtered_margin:.3f} m, arrival {arrival} s)",
        ok,
    )


def test_super_conflict_41_vehicles(super_41_run):
    run = super_41_run
    threshold = 15.0  # r_s of every vehicle; peers are zero-radius discs
    below = [rec.t for rec in run.records if rec.min_peer_dxi <= threshold]
    resolved_by = max(below) if below else 0.0
    arrivals = run.metrics.arrival_times
    ok = (
        resolved_by <= 5.0  # initial crowd spreads out fast and stays spread
        and all(a is not None and a <= 400.0 for a in arrivals)
        and run.runtime_s < 60.0
    )
    last = "none" if any(a is None for a in arrivals) else f"{max(arrivals):.2f}"
    criterion(
        "super_41: pairwise filtered distance above 15 m for good by "
        f"{resolved_by:.2f} s <= 5 s, all 41 arrive by 400 s "
        f"(last arrival {last} s), runtime {run.runtime_s:.1f} s < 60 s",
        ok,
    )


def test_pursuer_conflict_is_unavoidable(pursuer_run, tmp_path):
    code = cli.main(
        ["run", "--scenario", "pursuer_demo", "--out", str(tmp_path)]
    )
    m = pursuer_run.metrics
    ok = bool(m.conflict_events) and code == 2
    criterion(
        "pursuer_demo: faster pursuer forces a conflict in finite time, exit code 2 "
        f"(first conflict at t={m.conflict_events[0][0] if m.conflict_events else 'n/a'} s)",
        ok,
    )


def test_oracle_suite():
    start = time.perf_counter()
    results = verify.run_all()
    elapsed = time.perf_counter() - start
    by_name = {r.name: r for r in results}
    expected = {
        "speed_bound": (1000, 1e-9),
        "line_integral": (None, 1e-6),
        "eigen_lemma": (100000, 1e-12),
        "angle_convergence": (100, 0.0),
        "gradient_fd": (None, 1e-4),
    }
    ok = all(r.passed for r in results) and elapsed < 120.0
    for name, (trials, tol) in expected.items():
        r = by_name[name]
        ok = ok and r.tolerance == tol and (trials is None or r.trials == trials)
    ok = ok and "filtered_separation" in by_name  # sufficiency + breach construction
    criterion(
        f"oracle suite: all {len(results)} checks pass at stated tolerances in "
        f"{elapsed:.1f} s < 120 s",
        ok,
    )


def test_determinism(tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert cli.main(["run", "--scenario", "head_on", "--t-end", "10", "--out", str(out)]) == 0
        outs.append((out / "trace.csv").read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    criterion("determinism: repeated runs produce byte-identical trace.csv", ok)
    meta = json.loads((tmp_path / "a" / "trace.meta.json").read_text())
    assert meta["dt"] == 0.01
