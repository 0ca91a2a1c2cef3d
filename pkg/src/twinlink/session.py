"""Per-pilot session state and the fixed-tick simulation loop.

A session owns a twin and a physical stand-in that start from the identical
state, the delayed command link between them, the serving-cell tracker, and
the append-only flight log. ``run_tick`` is the whole control loop for one
tick: ingest commands, gate them, dual-dispatch, deliver delayed commands,
step both vehicles, update the radio link, log, and emit telemetry.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .decision import APPROVED, DENIED_STOP, Decision, DecisionConfig, decide
from .dynamics import (DynamicsConfig, PilotCommand, UavState, forward_component,
                       heading_direction, step, stop_command)
from .geo import WeatherProvider, WorldModel, lidar_range
from .link import CommandLink, LinkConfig
from .measurements import CellTracker, LinkQuality, MeasurementDb, RadioConfig


class CommandError(Exception):
    """Malformed or out-of-order pilot command; the session keeps running."""


DEFAULT_LIDAR_RANGE_M = 40.0


def _state_dict(s: UavState) -> dict:
    return {"pos": [round(c, 9) for c in s.position],
            "vel": [round(c, 9) for c in s.velocity],
            "heading": round(s.heading, 9),
            "speed": round(s.speed, 9)}


def _decision_dict(d: Optional[Decision]) -> Optional[dict]:
    if d is None:
        return None
    return {"verdict": d.verdict,
            "edl_m": round(d.edl_m, 9),
            "ld_m": None if math.isinf(d.ld_m) else round(d.ld_m, 9),
            "enl_ms": round(d.enl_ms, 9),
            "reason": d.reason}


class FlightLog:
    """Append-only per-tick record of a run."""

    def __init__(self):
        self.rows: list[dict] = []

    def append(self, row: dict) -> None:
        if self.rows and row["tick"] <= self.rows[-1]["tick"]:
            raise ValueError("flight log ticks must be strictly increasing")
        self.rows.append(row)

    def write_jsonl(self, path: str) -> None:
        with open(path, "w") as fh:
            for row in self.rows:
                fh.write(json.dumps(row) + "\n")

    def summary(self) -> dict:
        latencies = [r["realized_latency_ms"] for r in self.rows
                     if r["realized_latency_ms"] is not None]
        denials = sum(1 for r in self.rows
                      if r["decision"] and r["decision"]["verdict"] == DENIED_STOP)
        handovers = sum(1 for r in self.rows if r["handover"])
        return {
            "ticks": len(self.rows),
            "commands": sum(1 for r in self.rows if r["decision"] is not None),
            "denials": denials,
            "handovers": handovers,
            "latency_mean_ms": float(np.mean(latencies)) if latencies else None,
            "latency_std_ms": float(np.std(latencies)) if latencies else None,
        }


@dataclass(frozen=True)
class TelemetryFrame:
    tick: int
    twin: UavState
    physical: UavState
    decision: Optional[Decision]
    link_quality: LinkQuality
    ld_m: Optional[float]
    video_frame_seq: int
    video_bitrate_mbps: float

    def to_json(self) -> dict:
        return {
            "topic": "telemetry",
            "tick": self.tick,
            "twin": _state_dict(self.twin),
            "physical": _state_dict(self.physical),
            "decision": _decision_dict(self.decision),
            "link": {"cell_id": self.link_quality.cell_id,
                     "nl_ms": round(self.link_quality.nl_ms, 3),
                     "throughput_mbps": round(self.link_quality.throughput_mbps, 3),
                     "handover": self.link_quality.handover},
            "ld_m": None if self.ld_m is None else round(self.ld_m, 6),
            "video": {"frame_seq": self.video_frame_seq,
                      "bitrate_mbps": round(self.video_bitrate_mbps, 3)},
        }


class Session:
    """One pilot session: twin + physical pair behind a delayed link."""

    def __init__(self, session_id: str, world: WorldModel, weather: WeatherProvider,
                 db: MeasurementDb, dynamics: DynamicsConfig, link_cfg: LinkConfig,
                 decision_cfg: DecisionConfig, radio: RadioConfig, seed: int,
                 initial_state: Optional[UavState] = None,
                 initial_command: Optional[PilotCommand] = None,
                 lidar_max_range: float = DEFAULT_LIDAR_RANGE_M):
        self.id = session_id
        self.world = world
        self.weather = weather
        self.db = db
        self.dynamics = dynamics
        self.decision_cfg = decision_cfg
        self.lidar_max_range = lidar_max_range

        sid = zlib.crc32(session_id.encode("utf-8"))
        ss = np.random.SeedSequence([sid, int(seed)])
        link_ss, cell_ss = ss.spawn(2)
        self.link = CommandLink(link_cfg, dynamics.tick_dt,
                                np.random.default_rng(link_ss), db=db)
        self.cells = CellTracker(world, radio, np.random.default_rng(cell_ss))

        start = initial_state or UavState(position=(0.0, 0.0, 10.0),
                                          velocity=(0.0, 0.0, 0.0), heading=0.0, tick=0)
        self.twin = start
        self.physical = start
        self.tick = start.tick
        # Hold-last-command semantics on both vehicles.
        self.twin_command: Optional[PilotCommand] = initial_command
        self.physical_command: Optional[PilotCommand] = initial_command
        self.current_link: LinkQuality = LinkQuality(cell_id=None, nl_ms=0.0,
                                                     throughput_mbps=0.0, handover=False)
        self.flight_log = FlightLog()
        self.last_pilot_seq: Optional[int] = None
        self._outbound_seq = 0  # link-side sequence, decoupled from pilot seqs
        self._delivered_this_tick: list = []

    # -- command handling ---------------------------------------------------

    def validate(self, cmd: PilotCommand) -> None:
        if self.last_pilot_seq is not None and cmd.seq <= self.last_pilot_seq:
            raise CommandError(f"seq {cmd.seq} not after {self.last_pilot_seq}")
        sp = math.sqrt(sum(c * c for c in cmd.body_velocity_setpoint))
        if sp > self.dynamics.v_max + 1e-9:
            raise CommandError(f"setpoint {sp:.2f} m/s exceeds v_max {self.dynamics.v_max}")
        if cmd.kind not in ("motion", "stop"):
            raise CommandError(f"unknown command kind {cmd.kind!r}")

    def _twin_lidar(self) -> Optional[float]:
        return lidar_range(self.world, self.twin.position,
                           heading_direction(self.twin), self.lidar_max_range)

    def _dispatch(self, cmd: PilotCommand) -> None:
        self._outbound_seq += 1
        wire = PilotCommand(seq=self._outbound_seq, issued_at=cmd.issued_at,
                            body_velocity_setpoint=cmd.body_velocity_setpoint,
                            yaw_rate=cmd.yaw_rate, kind=cmd.kind)
        self.link.enqueue(wire, self.physical.position, self.tick)

    def _gate(self, cmd: PilotCommand, dispatch_approved: bool = True) -> Decision:
        ld = self._twin_lidar()
        dec = decide(cmd, self.twin, ld, self.db, self.decision_cfg,
                     current_cell=self.current_link.cell_id)
        if dec.verdict == APPROVED:
            if dispatch_approved:
                self.twin_command = cmd
                self._dispatch(cmd)
        else:
            stop = stop_command(seq=cmd.seq, issued_at=cmd.issued_at)
            self.twin_command = stop
            self._dispatch(stop)
        return dec

    # -- tick loop ----------------------------------------------------------

    def run_tick(self, commands: Sequence[PilotCommand] = ()) -> TelemetryFrame:
        last_decision: Optional[Decision] = None
        for cmd in commands:
            self.validate(cmd)
            self.last_pilot_seq = cmd.seq
            last_decision = self._gate(cmd)
        if not commands and self.twin_command is not None \
                and forward_component(self.twin_command) > 0:
            # Continuous monitoring: re-check the held command every tick so a
            # closing obstacle triggers the stop between pilot messages too.
            # A re-approval changes nothing and is not re-dispatched.
            dec = self._gate(self.twin_command, dispatch_approved=False)
            if dec.verdict == DENIED_STOP:
                last_decision = dec

        delivered = self.link.drain_detailed(self.tick)
        realized_ms: Optional[float] = None
        for inflight in delivered:
            self.physical_command = inflight.cmd
            realized_ms = inflight.sampled_latency_ms

        wind_t = self.weather.wind_at(self.twin.position, self.tick)
        wind_p = self.weather.wind_at(self.physical.position, self.tick)
        self.twin = step(self.twin, self.twin_command, wind_t, self.dynamics,
                         bounds=self.world.bounds)
        self.physical = step(self.physical, self.physical_command, wind_p,
                             self.dynamics, bounds=self.world.bounds)

        self.current_link = self.cells.attach(self.physical.position, self.tick)
        ld_now = self._twin_lidar()
        self.tick += 1

        row = {
            "tick": self.tick,
            "twin": _state_dict(self.twin),
            "physical": _state_dict(self.physical),
            "cmd_seq": None if self.twin_command is None else self.twin_command.seq,
            "decision": _decision_dict(last_decision),
            "ld_m": None if ld_now is None else round(ld_now, 9),
            "edl_m": None if last_decision is None else round(last_decision.edl_m, 9),
            "enl_ms": None if last_decision is None else round(last_decision.enl_ms, 9),
            "realized_latency_ms": None if realized_ms is None else round(realized_ms, 6),
            "cell_id": self.current_link.cell_id,
            "handover": self.current_link.handover,
            "wind": [round(c, 9) for c in wind_t.velocity],
        }
        self.flight_log.append(row)

        return TelemetryFrame(
            tick=self.tick, twin=self.twin, physical=self.physical,
            decision=last_decision, link_quality=self.current_link, ld_m=ld_now,
            video_frame_seq=self.tick,
            video_bitrate_mbps=0.5 * self.current_link.throughput_mbps)

    def both_stopped(self, threshold: float = 0.05) -> bool:
        return (self.twin.speed < threshold and self.physical.speed < threshold
                and self.link.pending() == 0)
