"""Desk-scale reproduction of the field experiments.

Three entry points:

* ``collision`` - seeded approach-and-stop runs against a wall obstacle,
  with and without delay compensation, reporting the latency inferred from
  the twin/physical stop-position gap.
* ``measure`` - the two measurement flights (altitude sweep and horizontal
  back-and-forth) that build the latency database and the handover /
  throughput tables.
* ``report`` - tables and comparison plots from a results directory.

The "operator" is a deterministic 20 Hz forward command stream that releases
the stick at the first denial. Runs start from a synchronized cruise (both
vehicles already at the commanded speed), so the stop-position gap isolates
the delivery delay of the stop command: without compensation the gap divided
by speed recovers the injected latency, and with compensation the gap is
measured against the twin's uncompensated stop point, so only the estimation
residual remains.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import AppConfig, ServerConfig
from .decision import DENIED_STOP, DecisionConfig
from .dynamics import DynamicsConfig, PilotCommand, UavState
from .geo import (Aabb, BaseStation, CALM, Geodetic, WeatherProvider, WeatherRecord,
                  WorldModel)
from .link import LinkConfig
from .measurements import (LatencyRecord, MeasurementDb, RadioConfig,
                           generate_measurements, save_jsonl)

DEFAULT_OBSTACLE_DISTANCE_M = 30.0
START_ALT_M = 10.0
STOP_SPEED = 0.05  # m/s, "fully stopped"


# ---------------------------------------------------------------------------
# default worlds

def collision_world(obstacle_distance: float = DEFAULT_OBSTACLE_DISTANCE_M) -> WorldModel:
    """Open corridor along +x with a wall obstacle across the flight path."""
    d = obstacle_distance
    return WorldModel(
        origin=Geodetic(lat=60.18, lon=24.82, alt=0.0),
        bounds=Aabb(min=(-50.0, -200.0, 0.0), max=(250.0, 200.0, 150.0)),
        obstacles=(Aabb(min=(d, -20.0, 0.0), max=(d + 2.0, 20.0, 40.0)),),
        base_stations=(
            BaseStation(id="cell-a", position=(0.0, -60.0, 25.0)),
            BaseStation(id="cell-b", position=(d + 30.0, -60.0, 25.0)),
        ),
    )


def measurement_world() -> WorldModel:
    """Multi-cell layout for the measurement flights; no obstacles."""
    return WorldModel(
        origin=Geodetic(lat=60.18, lon=24.82, alt=0.0),
        bounds=Aabb(min=(-100.0, -100.0, 0.0), max=(250.0, 250.0, 150.0)),
        obstacles=(),
        base_stations=(
            BaseStation(id="cell-1", position=(0.0, 0.0, 25.0)),
            BaseStation(id="cell-2", position=(100.0, 0.0, 25.0)),
            BaseStation(id="cell-3", position=(0.0, 100.0, 25.0)),
            BaseStation(id="cell-4", position=(110.0, 110.0, 25.0)),
        ),
    )


def default_config(world: Optional[WorldModel] = None, seed: int = 0,
                   db: Optional[MeasurementDb] = None, **overrides) -> AppConfig:
    return AppConfig(
        world=world or collision_world(),
        weather=WeatherProvider([WeatherRecord(wind=(0.0, 0.0, 0.0), gust_std=0.0)],
                                seed=seed),
        db=db if db is not None else MeasurementDb([]),
        seed=seed,
        **overrides,
    )


def corridor_measurement_db(world: WorldModel, radio: RadioConfig, seed: int,
                            length: float = 40.0) -> MeasurementDb:
    """Latency records along the collision corridor at flight altitude."""
    speed = 5.0
    dt = 0.01
    traj = []
    ticks = int(length / speed / dt)
    for t in range(0, ticks, 10):  # one record every 0.1 s
        x = speed * t * dt
        traj.append((t, (x, 0.0, START_ALT_M), speed))
    records = generate_measurements(world, traj, radio, seed=seed, tick_dt=dt)
    return MeasurementDb(records)


# ---------------------------------------------------------------------------
# collision runs

@dataclass
class RunResult:
    speed: float
    dc: bool
    gap_m: float  # physical stop x - twin stop x
    compensation_m: float  # EDL applied at the firing decision (0 without DC)
    d_delta_m: float  # |gap - compensation|
    tcl_ms: float
    injected_mean_ms: float  # mean sampled latency over the run's commands
    stop_latency_ms: Optional[float]  # realized latency of the stop delivery
    min_clearance_twin_m: float
    min_clearance_physical_m: float
    collision: bool
    ticks: int

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in (
            "speed", "dc", "gap_m", "compensation_m", "d_delta_m", "tcl_ms",
            "injected_mean_ms", "stop_latency_ms", "min_clearance_twin_m",
            "min_clearance_physical_m", "collision", "ticks")}


def run_single_collision(cfg: AppConfig, speed: float, dc: bool, run_seed: int,
                         obstacle_distance: float = DEFAULT_OBSTACLE_DISTANCE_M,
                         max_ticks: int = 60_000) -> RunResult:
    cfg = replace_decision(cfg, dc)
    dt = cfg.dynamics.tick_dt
    start = UavState(position=(0.0, 0.0, START_ALT_M),
                     velocity=(speed, 0.0, 0.0), heading=0.0, tick=0)
    cruise = PilotCommand(seq=0, issued_at=0.0,
                          body_velocity_setpoint=(speed, 0.0, 0.0))
    session = cfg.make_session(f"run-{run_seed}-{'dc' if dc else 'base'}",
                               seed=run_seed, initial_state=start,
                               initial_command=cruise)
    cmd_period = max(1, int(round(1.0 / (cfg.command_rate_hz * dt))))
    wall_x = obstacle_distance
    seq = 0
    denied = False
    compensation = 0.0
    stop_latency_ms: Optional[float] = None
    min_ct = min_cp = math.inf
    tick = 0
    for tick in range(max_ticks):
        cmds = []
        if not denied and tick % cmd_period == 0:
            seq += 1
            cmds = [PilotCommand(seq=seq, issued_at=tick * dt * 1000.0,
                                 body_velocity_setpoint=(speed, 0.0, 0.0))]
        frame = session.run_tick(cmds)
        if not denied and frame.decision is not None \
                and frame.decision.verdict == DENIED_STOP:
            denied = True
            compensation = frame.decision.edl_m
        row = session.flight_log.rows[-1]
        if denied and stop_latency_ms is None and row["realized_latency_ms"] is not None \
                and session.physical_command is not None \
                and session.physical_command.is_stop():
            stop_latency_ms = row["realized_latency_ms"]
        min_ct = min(min_ct, wall_x - session.twin.position[0])
        min_cp = min(min_cp, wall_x - session.physical.position[0])
        if denied and session.both_stopped(STOP_SPEED):
            break
    gap = session.physical.position[0] - session.twin.position[0]
    d_delta = abs(gap - compensation)
    tcl_ms = d_delta / speed * 1000.0
    lat = session.link.sampled_latencies_ms
    return RunResult(
        speed=speed, dc=dc, gap_m=gap, compensation_m=compensation,
        d_delta_m=d_delta, tcl_ms=tcl_ms,
        injected_mean_ms=float(np.mean(lat)) if lat else 0.0,
        stop_latency_ms=stop_latency_ms,
        min_clearance_twin_m=min_ct, min_clearance_physical_m=min_cp,
        collision=(min_ct <= 0.0 or min_cp <= 0.0), ticks=tick + 1)


def replace_decision(cfg: AppConfig, dc: bool) -> AppConfig:
    if cfg.decision.dc_enabled == dc:
        return cfg
    dec = replace(cfg.decision, dc_enabled=dc)
    out = AppConfig(world=cfg.world, weather=cfg.weather, db=cfg.db,
                    dynamics=cfg.dynamics, link=cfg.link, decision=dec,
                    radio=cfg.radio, server=cfg.server,
                    lidar_max_range=cfg.lidar_max_range,
                    command_rate_hz=cfg.command_rate_hz, seed=cfg.seed)
    return out


def _aggregate(runs: list[RunResult]) -> dict:
    tcls = [r.tcl_ms for r in runs]
    inj = [r.injected_mean_ms for r in runs]
    return {
        "runs": len(runs),
        "tcl_mean_ms": float(np.mean(tcls)),
        "tcl_std_ms": float(np.std(tcls)),
        "injected_mean_ms": float(np.mean(inj)),
        "collisions": sum(1 for r in runs if r.collision),
    }


def run_collision_trials(cfg: AppConfig, runs: int = 20, dc: bool = False,
                         seed: int = 0,
                         obstacle_distance: float = DEFAULT_OBSTACLE_DISTANCE_M) -> dict:
    """One arm of the collision experiment; seeded per-run speeds 1-5 m/s."""
    results = []
    for r in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r, 917]))
        speed = float(rng.uniform(1.0, 5.0))
        results.append(run_single_collision(cfg, speed, dc, run_seed=seed * 100_003 + r,
                                            obstacle_distance=obstacle_distance))
    return {"arm": "dc" if dc else "baseline",
            "per_run": [x.to_json() for x in results],
            "aggregate": _aggregate(results)}


def compare_dc(cfg: AppConfig, runs: int = 20, seed: int = 0,
               obstacle_distance: float = DEFAULT_OBSTACLE_DISTANCE_M) -> dict:
    """Paired comparison: identical per-run seeds and speeds for both arms."""
    base = run_collision_trials(cfg, runs=runs, dc=False, seed=seed,
                                obstacle_distance=obstacle_distance)
    comp = run_collision_trials(cfg, runs=runs, dc=True, seed=seed,
                                obstacle_distance=obstacle_distance)
    mean_tcl = base["aggregate"]["tcl_mean_ms"]
    mean_tcl_dc = comp["aggregate"]["tcl_mean_ms"]
    degenerate = mean_tcl < 1.0  # effectively zero-latency link
    reduction = None if degenerate else 100.0 * (1.0 - mean_tcl_dc / mean_tcl)
    return {
        "baseline": base,
        "dc": comp,
        "cl_mean_ms": cfg.link.cl_mean_ms,
        "cl_std_ms": cfg.link.cl_std_ms,
        "tcl_mean_ms": mean_tcl,
        "tcl_dc_mean_ms": mean_tcl_dc,
        "reduction_pct": reduction,
        "degenerate": degenerate,
    }


# ---------------------------------------------------------------------------
# measurement scenarios

def _band(alt: float, width: float = 10.0) -> int:
    return int(alt // width)


def run_measurement_scenario(scenario: str, seed: int = 0,
                             radio: Optional[RadioConfig] = None,
                             world: Optional[WorldModel] = None,
                             tick_dt: float = 0.01) -> dict:
    """Fly one measurement trajectory and tabulate handover/throughput/latency."""
    radio = radio or RadioConfig()
    world = world or measurement_world()
    if scenario == "altitude":
        # fixed spot, climb 0 -> 130 m at 2 m/s; the spot is deliberately
        # off-center so the station distances are distinct and the handover
        # probability ramps smoothly with the selection jitter
        pos_xy = (40.0, 30.0)
        climb = 2.0
        ticks = int(130.0 / climb / tick_dt)
        traj = [(t, (pos_xy[0], pos_xy[1], climb * t * tick_dt), climb)
                for t in range(ticks)]
    elif scenario == "horizontal":
        # 100 m back-and-forth at 5 m/s, fixed 10 m altitude
        speed = 5.0
        leg_ticks = int(100.0 / speed / tick_dt)
        traj = []
        for t in range(0, 2 * leg_ticks, 5):
            x = speed * t * tick_dt
            if t >= leg_ticks:
                x = 200.0 - x
            traj.append((t, (x, 0.0, 10.0), speed))
    else:
        raise ValueError(f"unknown scenario {scenario!r}")

    records = generate_measurements(world, traj, radio, seed=seed, tick_dt=tick_dt)

    handover_by_band: dict[int, int] = {}
    samples_by_band: dict[int, int] = {}
    throughput_by_band: dict[int, list[float]] = {}
    prev_cell = None
    for rec in records:
        band = _band(rec.enu[2])
        samples_by_band[band] = samples_by_band.get(band, 0) + 1
        throughput_by_band.setdefault(band, []).append(rec.throughput_mbps)
        if prev_cell is not None and rec.cell_id != prev_cell:
            handover_by_band[band] = handover_by_band.get(band, 0) + 1
        prev_cell = rec.cell_id

    nl_by_quarter: dict[int, list[float]] = {}
    n = len(records)
    for i, rec in enumerate(records):
        nl_by_quarter.setdefault(min(3, 4 * i // n), []).append(rec.nl_ms)

    bands = sorted(samples_by_band)
    return {
        "scenario": scenario,
        "records": records,
        "cells": sorted({r.cell_id for r in records}),
        "handover_rate_by_band": {
            b: handover_by_band.get(b, 0) / samples_by_band[b] for b in bands},
        "handover_count_by_band": {b: handover_by_band.get(b, 0) for b in bands},
        "throughput_mean_by_band": {
            b: float(np.mean(throughput_by_band[b])) for b in bands},
        "nl_mean_by_quarter": {q: float(np.mean(v)) for q, v in sorted(nl_by_quarter.items())},
    }


# ---------------------------------------------------------------------------
# reporting

def write_report(out_dir: str, comparison: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        slim = {k: v for k, v in comparison.items() if k not in ("baseline", "dc")}
        slim["baseline_aggregate"] = comparison["baseline"]["aggregate"]
        slim["dc_aggregate"] = comparison["dc"]["aggregate"]
        json.dump(slim, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        writer = None
        for arm in ("baseline", "dc"):
            for row in comparison[arm]["per_run"]:
                if writer is None:
                    writer = csv.DictWriter(fh, fieldnames=list(row))
                    writer.writeheader()
                writer.writerow(row)


def plot_latency_comparison(out_path: str, comparison: dict) -> None:
    """Bar chart of measured CL vs inferred TCL vs TCL with compensation."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = ["CL (injected)", "TCL", "TCL_DC"]
    means = [comparison["baseline"]["aggregate"]["injected_mean_ms"],
             comparison["tcl_mean_ms"], comparison["tcl_dc_mean_ms"]]
    stds = [comparison["cl_std_ms"],
            comparison["baseline"]["aggregate"]["tcl_std_ms"],
            comparison["dc"]["aggregate"]["tcl_std_ms"]]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(labels, means, yerr=stds, capsize=4, color=["#888", "#c33", "#393"])
    ax.set_ylabel("latency [ms]")
    red = comparison.get("reduction_pct")
    if red is not None:
        ax.set_title(f"delay reduction {red:.1f}%")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# CLI

def _cmd_collision(args: argparse.Namespace) -> int:
    world = collision_world(args.obstacle_distance)
    radio = RadioConfig()
    db = corridor_measurement_db(world, radio, seed=args.seed)
    cfg = default_config(world=world, seed=args.seed, db=db)
    os.makedirs(args.out, exist_ok=True)
    status = 0
    if args.dc == "both":
        comparison = compare_dc(cfg, runs=args.runs, seed=args.seed,
                                obstacle_distance=args.obstacle_distance)
        write_report(args.out, comparison)
        plot_latency_comparison(os.path.join(args.out, "latency_comparison.png"),
                                comparison)
        red = comparison["reduction_pct"]
        print(f"TCL mean {comparison['tcl_mean_ms']:.2f} ms, "
              f"TCL_DC mean {comparison['tcl_dc_mean_ms']:.2f} ms, "
              f"reduction {red if red is None else round(red, 2)}%")
        if comparison["dc"]["aggregate"]["collisions"] > 0:
            status = 1
        if red is not None and red < 40.0:
            status = 1
    else:
        arm = run_collision_trials(cfg, runs=args.runs, dc=(args.dc == "on"),
                                   seed=args.seed,
                                   obstacle_distance=args.obstacle_distance)
        with open(os.path.join(args.out, f"{arm['arm']}.json"), "w") as fh:
            json.dump(arm, fh, indent=2)
            fh.write("\n")
        print(f"{arm['arm']}: TCL mean {arm['aggregate']['tcl_mean_ms']:.2f} ms "
              f"over {args.runs} runs, {arm['aggregate']['collisions']} collisions")
    return status


def _cmd_measure(args: argparse.Namespace) -> int:
    result = run_measurement_scenario(args.scenario, seed=args.seed)
    records = result.pop("records")
    if args.out:
        save_jsonl(records, args.out)
        print(f"wrote {len(records)} records to {args.out}")
    print(json.dumps(result, indent=2))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    path = os.path.join(args.in_dir, "summary.json")
    with open(path) as fh:
        summary = json.load(fh)
    print(json.dumps(summary, indent=2))
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="twinlink-trials",
                                     description="collision and measurement trials")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collision", help="approach-and-stop runs")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--dc", choices=["on", "off", "both"], default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="trial-results")
    p.add_argument("--obstacle-distance", type=float,
                   default=DEFAULT_OBSTACLE_DISTANCE_M)
    p.set_defaults(func=_cmd_collision)

    p = sub.add_parser("measure", help="measurement flights")
    p.add_argument("--scenario", choices=["altitude", "horizontal"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="measurement JSONL output path")
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("report", help="print a results summary")
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
