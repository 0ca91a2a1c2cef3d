import json
import os

import numpy as np
import pytest

from twinlink.link import LinkConfig
from twinlink.measurements import RadioConfig
from twinlink.trials import (collision_world, compare_dc, corridor_measurement_db,
                             default_config, main, measurement_world,
                             run_collision_trials, run_measurement_scenario,
                             run_single_collision)


def constant_latency_cfg(latency_ms, seed=0):
    world = collision_world()
    return default_config(
        world=world, seed=seed,
        link=LinkConfig(cl_mean_ms=latency_ms, cl_std_ms=0.0, nl_source="zero"))


@pytest.mark.parametrize("latency_ms", [50.0, 150.0])
@pytest.mark.parametrize("speed", [1.0, 4.0])
def test_tcl_recovers_injected_latency(latency_ms, speed):
    cfg = constant_latency_cfg(latency_ms)
    r = run_single_collision(cfg, speed, dc=False, run_seed=1)
    assert abs(r.tcl_ms - latency_ms) <= 20.0  # two ticks


def test_zero_latency_gap_below_one_tick():
    cfg = constant_latency_cfg(0.0)
    r = run_single_collision(cfg, 3.0, dc=False, run_seed=1)
    assert r.d_delta_m < 3.0 * 0.01  # one tick's travel
    assert r.tcl_ms <= 10.0


def test_perfect_estimate_cancels_delay():
    # latency forced to exactly cl_ms with a zero network term: the gate
    # fires exactly EDL early and the physical stops at the nominal point
    world = collision_world()
    from twinlink.decision import DecisionConfig
    cfg = default_config(
        world=world, seed=0,
        link=LinkConfig(cl_mean_ms=146.0, cl_std_ms=0.0, nl_source="zero"),
        decision=DecisionConfig(cl_ms=146.0, dc_enabled=True))
    r = run_single_collision(cfg, 4.0, dc=True, run_seed=3)
    assert r.tcl_ms <= 20.0  # within 2 ticks of zero


def test_paired_seed_reproducibility():
    world = collision_world()
    radio = RadioConfig()
    db = corridor_measurement_db(world, radio, seed=0)
    cfg = default_config(world=world, seed=0, db=db)
    a = compare_dc(cfg, runs=3, seed=11)
    b = compare_dc(cfg, runs=3, seed=11)
    assert a == b


def test_dc_arm_never_ends_closer():
    world = collision_world()
    radio = RadioConfig()
    db = corridor_measurement_db(world, radio, seed=0)
    cfg = default_config(world=world, seed=0, db=db)
    comparison = compare_dc(cfg, runs=6, seed=2)
    for base, comp in zip(comparison["baseline"]["per_run"],
                          comparison["dc"]["per_run"]):
        assert base["speed"] == comp["speed"]  # paired
        assert comp["min_clearance_physical_m"] >= base["min_clearance_physical_m"] - 1e-9


def test_degenerate_zero_latency_comparison_flagged():
    cfg = constant_latency_cfg(0.0)
    comparison = compare_dc(cfg, runs=2, seed=0)
    assert comparison["degenerate"]
    assert comparison["reduction_pct"] is None


def test_collision_runs_deterministic_speeds():
    cfg = constant_latency_cfg(100.0)
    a = run_collision_trials(cfg, runs=3, dc=False, seed=5)
    b = run_collision_trials(cfg, runs=3, dc=False, seed=5)
    assert a == b
    speeds = [r["speed"] for r in a["per_run"]]
    assert all(1.0 <= s <= 5.0 for s in speeds)


def test_altitude_scenario_trends():
    result = run_measurement_scenario("altitude", seed=0)
    tp = result["throughput_mean_by_band"]
    low = np.mean([tp[b] for b in tp if b < 2])
    high = np.mean([tp[b] for b in tp if b >= 2])
    assert abs(low - 60.0) <= 12.0
    assert abs(high - 10.0) <= 2.0
    rates = [result["handover_rate_by_band"][b]
             for b in sorted(result["handover_rate_by_band"])]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_horizontal_scenario_trends():
    result = run_measurement_scenario("horizontal", seed=0)
    assert len(result["cells"]) >= 2
    nl = list(result["nl_mean_by_quarter"].values())
    assert max(nl) - min(nl) < 15.0  # roughly constant along the path


def test_cli_measure_writes_jsonl(tmp_path, capsys):
    out = tmp_path / "meas.jsonl"
    rc = main(["measure", "--scenario", "horizontal", "--seed", "1",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) > 100
    row = json.loads(lines[0])
    assert set(row) == {"lat", "lon", "alt", "cell_id", "nl_ms",
                        "throughput_mbps", "timestamp"}


def test_cli_collision_and_report(tmp_path, capsys):
    out = tmp_path / "res"
    rc = main(["collision", "--runs", "4", "--dc", "both", "--seed", "0",
               "--out", str(out)])
    assert rc == 0
    assert (out / "summary.json").exists()
    assert (out / "runs.csv").exists()
    assert (out / "latency_comparison.png").exists()
    rc = main(["report", "--in", str(out)])
    assert rc == 0
    assert "reduction_pct" in capsys.readouterr().out
