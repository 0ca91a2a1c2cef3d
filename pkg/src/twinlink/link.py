"""Delayed command channel between the edge server and the physical stand-in.

Every command picks up a latency sampled from the measured command-latency
distribution (Gaussian truncated at zero) plus a network-latency term chosen
by configuration: the measurement database, a constant, or zero. Delivery is
strictly FIFO; a fast sample can never overtake a slow one, matching an
order-preserving transport.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import PilotCommand
from .measurements import MeasurementDb, get_enl


class LinkProtocolError(Exception):
    """Out-of-order enqueue."""


@dataclass(frozen=True)
class LinkConfig:
    cl_mean_ms: float = 146.04
    cl_std_ms: float = 27.23
    nl_source: str = "db"  # "db" | "constant" | "zero"
    nl_const_ms: float = 0.0

    def __post_init__(self):
        if self.cl_std_ms < 0:
            raise ValueError("cl_std_ms must be >= 0")
        if self.nl_source not in ("db", "constant", "zero"):
            raise ValueError(f"unknown nl_source {self.nl_source!r}")


@dataclass(frozen=True)
class InFlightCommand:
    cmd: PilotCommand
    deliver_at_tick: int
    sampled_latency_ms: float


class CommandLink:
    """One per session. enqueue/drain are never called concurrently."""

    def __init__(self, cfg: LinkConfig, tick_dt: float, rng: np.random.Generator,
                 db: Optional[MeasurementDb] = None):
        self.cfg = cfg
        self.tick_dt = tick_dt
        self.rng = rng
        self.db = db
        self._queue: deque[InFlightCommand] = deque()
        self._last_seq: Optional[int] = None
        self._last_deliver_at = 0
        self.sampled_latencies_ms: list[float] = []

    def _network_latency(self, uav_pos: Sequence[float]) -> float:
        if self.cfg.nl_source == "zero":
            return 0.0
        if self.cfg.nl_source == "constant":
            return self.cfg.nl_const_ms
        if self.db is None:
            return self.cfg.nl_const_ms
        return get_enl(self.db, uav_pos).nl_ms

    def enqueue(self, cmd: PilotCommand, uav_pos: Sequence[float], now_tick: int) -> InFlightCommand:
        if self._last_seq is not None and cmd.seq <= self._last_seq:
            raise LinkProtocolError(f"command seq {cmd.seq} not after {self._last_seq}")
        cl = max(0.0, float(self.rng.normal(self.cfg.cl_mean_ms, self.cfg.cl_std_ms)))
        latency = cl + self._network_latency(uav_pos)
        deliver_at = now_tick + int(round(latency / (self.tick_dt * 1000.0)))
        # FIFO: a later command can never arrive before an earlier one.
        deliver_at = max(deliver_at, self._last_deliver_at)
        inflight = InFlightCommand(cmd=cmd, deliver_at_tick=deliver_at,
                                   sampled_latency_ms=latency)
        self._queue.append(inflight)
        self._last_seq = cmd.seq
        self._last_deliver_at = deliver_at
        self.sampled_latencies_ms.append(latency)
        return inflight

    def drain_detailed(self, now_tick: int) -> list[InFlightCommand]:
        out = []
        while self._queue and self._queue[0].deliver_at_tick <= now_tick:
            out.append(self._queue.popleft())
        return out

    def drain(self, now_tick: int) -> list[PilotCommand]:
        return [f.cmd for f in self.drain_detailed(now_tick)]

    def pending(self) -> int:
        return len(self._queue)
