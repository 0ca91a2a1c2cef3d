"""Delay-compensated monitoring and decision logic.

Each forward command is checked against the stop gate

    LD <= TH + EDL,    EDL = (CL + ENL) * US

where LD is the virtual LiDAR clearance, TH the fixed stop threshold, CL the
mean command latency, ENL the network-latency estimate from the measurement
database, and US the vehicle speed. A command that trips the gate is denied
and a stop is substituted; everything else passes through unchanged. With
delay compensation disabled the gate degrades to the bare LD <= TH check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .dynamics import PilotCommand, UavState, forward_component
from .measurements import MeasurementDb, get_enl

APPROVED = "approved"
DENIED_STOP = "denied_stop"


@dataclass(frozen=True)
class DecisionConfig:
    th_m: float = 1.0  # stop threshold
    cl_ms: float = 146.0  # mean command latency assumed by the gate
    dc_enabled: bool = True
    fallback_enl_ms: float = 0.0

    def __post_init__(self):
        if self.th_m <= 0:
            raise ValueError("th_m must be > 0")
        if self.cl_ms < 0:
            raise ValueError("cl_ms must be >= 0")


@dataclass(frozen=True)
class Decision:
    verdict: str  # APPROVED | DENIED_STOP
    edl_m: float
    ld_m: float  # +inf when the LiDAR saw nothing
    enl_ms: float
    reason: str
    enl_available: bool = True


def compute_edl(cl_ms: float, enl_ms: float, us: float) -> float:
    """Latency error distance in meters: (CL + ENL) * US, latencies in ms."""
    if cl_ms < 0 or enl_ms < 0 or us < 0:
        raise ValueError("compute_edl inputs must be >= 0")
    return (cl_ms + enl_ms) / 1000.0 * us


def decide(cmd: PilotCommand, state: UavState, ld_m: Optional[float],
           db: MeasurementDb, cfg: DecisionConfig,
           current_cell: Optional[str] = None) -> Decision:
    """Evaluate one command against the stop gate. ld_m=None means no LiDAR hit."""
    ld = math.inf if ld_m is None else ld_m
    if cfg.dc_enabled:
        est = get_enl(db, state.position, current_cell, fallback_nl_ms=cfg.fallback_enl_ms)
        enl = est.nl_ms
        available = est.available
        cl = cfg.cl_ms
    else:
        enl, available, cl = 0.0, True, 0.0
    edl = compute_edl(cl, enl, state.speed)
    forward = forward_component(cmd) > 0.0
    if ld <= cfg.th_m + edl and forward:
        return Decision(verdict=DENIED_STOP, edl_m=edl, ld_m=ld, enl_ms=enl,
                        reason=f"clearance {ld:.2f} m <= {cfg.th_m:.2f} + {edl:.2f} m",
                        enl_available=available)
    reason = "not a forward command" if not forward else "clearance ok"
    return Decision(verdict=APPROVED, edl_m=edl, ld_m=ld, enl_ms=enl, reason=reason,
                    enl_available=available)
