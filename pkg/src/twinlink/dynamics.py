"""Shared quadcopter point-mass dynamics for the twin and the physical stand-in.

Both vehicles run this exact code path, so given identical command and wind
streams they trace identical trajectories. The model is a first-order velocity
lag toward a world-frame setpoint with semi-implicit Euler integration: enough
to make the stop-position gap proportional to command latency, which is the
property the delay-compensation logic exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .geo import Aabb, WindSample

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class UavState:
    position: Vec3  # ENU m
    velocity: Vec3  # m/s, world frame
    heading: float  # yaw, rad (0 = +x/east)
    tick: int

    @property
    def speed(self) -> float:
        return math.sqrt(sum(c * c for c in self.velocity))


@dataclass(frozen=True)
class PilotCommand:
    seq: int
    issued_at: float  # ms
    body_velocity_setpoint: Vec3  # m/s, x = forward
    yaw_rate: float = 0.0  # rad/s
    kind: str = "motion"  # "motion" | "stop"

    def is_stop(self) -> bool:
        return self.kind == "stop"


def stop_command(seq: int, issued_at: float) -> PilotCommand:
    return PilotCommand(seq=seq, issued_at=issued_at,
                        body_velocity_setpoint=(0.0, 0.0, 0.0), yaw_rate=0.0, kind="stop")


@dataclass(frozen=True)
class DynamicsConfig:
    tau: float = 0.3  # s, velocity response time constant under motion commands
    brake_tau: float = 0.05  # s, much stiffer response while executing a stop
    v_max: float = 6.0  # m/s
    tick_dt: float = 0.01  # s
    wind_gain: float = 1.0

    def __post_init__(self):
        if self.tau <= 0 or self.brake_tau <= 0 or self.tick_dt <= 0:
            raise ValueError("tau, brake_tau and tick_dt must be > 0")
        if self.tick_dt > self.tau / 3 or self.tick_dt > self.brake_tau / 3:
            raise ValueError(f"tick_dt must be <= tau/3 for a stable update "
                             f"(tick_dt={self.tick_dt}, tau={self.tau}, "
                             f"brake_tau={self.brake_tau})")


def body_to_world(setpoint: Sequence[float], heading: float) -> Vec3:
    """Rotate a body-frame setpoint (x forward) into the world frame by yaw."""
    c, s = math.cos(heading), math.sin(heading)
    bx, by, bz = setpoint
    return (c * bx - s * by, s * bx + c * by, bz)


def forward_component(cmd: Optional[PilotCommand]) -> float:
    """Signed body-x setpoint; > 0 means the command pushes toward the LiDAR ray."""
    if cmd is None or cmd.is_stop():
        return 0.0
    return cmd.body_velocity_setpoint[0]


def step(state: UavState, active_command: Optional[PilotCommand], wind: WindSample,
         cfg: DynamicsConfig, bounds: Optional[Aabb] = None) -> UavState:
    """Advance one tick: velocity relaxes toward the setpoint, position integrates.

    A stop (or absent) command is a zero setpoint. Wind enters as an additive
    velocity bias scaled by wind_gain. Position is clamped to ``bounds`` when
    given.
    """
    braking = active_command is None or active_command.is_stop()
    if braking:
        target: Vec3 = (0.0, 0.0, 0.0)
        yaw_rate = 0.0
    else:
        target = body_to_world(active_command.body_velocity_setpoint, state.heading)
        yaw_rate = active_command.yaw_rate
    wx, wy, wz = wind.velocity
    g = cfg.wind_gain
    target = (target[0] + g * wx, target[1] + g * wy, target[2] + g * wz)

    alpha = cfg.tick_dt / (cfg.brake_tau if braking else cfg.tau)
    vel = tuple(v + (t - v) * alpha for v, t in zip(state.velocity, target))
    pos = tuple(p + v * cfg.tick_dt for p, v in zip(state.position, vel))
    if bounds is not None:
        pos = tuple(min(max(p, lo), hi) for p, lo, hi in zip(pos, bounds.min, bounds.max))
    heading = state.heading + yaw_rate * cfg.tick_dt
    return replace(state, position=pos, velocity=vel, heading=heading, tick=state.tick + 1)


def heading_direction(state: UavState) -> Vec3:
    """Unit body-x axis in the world frame (the LiDAR boresight)."""
    return (math.cos(state.heading), math.sin(state.heading), 0.0)
