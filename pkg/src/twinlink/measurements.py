"""Measurement database and radio model.

Holds the latency records collected during measurement flights, the
nearest-neighbor network-latency estimator used by the decision gate, the
cell attachment / handover model, and a synthetic trace generator that
reproduces the measured altitude/throughput/handover trends.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geo import Geodetic, WorldModel, enu_to_geodetic, geodetic_to_enu, lidar_range

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class LatencyRecord:
    lat: float
    lon: float
    alt: float
    cell_id: str
    nl_ms: float
    throughput_mbps: float
    timestamp: float  # ms
    enu: Vec3  # cached local position

    def __post_init__(self):
        if self.nl_ms < 0 or self.throughput_mbps < 0:
            raise ValueError("nl_ms and throughput_mbps must be >= 0")

    def to_json(self) -> dict:
        return {"lat": self.lat, "lon": self.lon, "alt": self.alt, "cell_id": self.cell_id,
                "nl_ms": self.nl_ms, "throughput_mbps": self.throughput_mbps,
                "timestamp": self.timestamp}


@dataclass(frozen=True)
class LinkQuality:
    cell_id: Optional[str]
    nl_ms: float
    throughput_mbps: float
    handover: bool


@dataclass(frozen=True)
class EnlEstimate:
    nl_ms: float
    available: bool  # False when the database was empty
    record_index: Optional[int] = None


@dataclass(frozen=True)
class RadioConfig:
    base_nl_ms: float = 25.0
    handover_penalty_ms: float = 30.0
    nl_noise_ms: float = 8.0  # half-normal scale added on top of base_nl
    throughput_low_alt_mbps: float = 60.0
    throughput_high_alt_mbps: float = 10.0
    throughput_spread_mbps: float = 5.0
    alt_threshold_m: float = 20.0
    # Relative gain jitter applied to BS selection above the downtilt altitude;
    # ramps linearly from the threshold up to jitter_ramp_m above it.
    gain_jitter: float = 0.5
    jitter_ramp_m: float = 110.0
    handover_hold_ticks: int = 50  # ticks the handover latency penalty persists
    fallback_nl_ms: float = 0.0  # used when no coverage / empty database


class MeasurementDb:
    """Immutable store of latency records with a per-cell index."""

    def __init__(self, records: Sequence[LatencyRecord]):
        self.records = list(records)
        self.by_cell: dict[str, list[int]] = {}
        for i, rec in enumerate(self.records):
            self.by_cell.setdefault(rec.cell_id, []).append(i)
        self.positions = np.array([r.enu for r in self.records], dtype=float) \
            if self.records else np.empty((0, 3))
        self._cell_index = {cell: np.array(idx, dtype=int)
                            for cell, idx in self.by_cell.items()}

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_jsonl(cls, path: str, origin: Geodetic) -> "MeasurementDb":
        records = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                enu = geodetic_to_enu(raw["lat"], raw["lon"], raw["alt"], origin)
                records.append(LatencyRecord(
                    lat=raw["lat"], lon=raw["lon"], alt=raw["alt"],
                    cell_id=str(raw["cell_id"]), nl_ms=float(raw["nl_ms"]),
                    throughput_mbps=float(raw["throughput_mbps"]),
                    timestamp=float(raw.get("timestamp", 0.0)), enu=enu))
        return cls(records)


def save_jsonl(records: Sequence[LatencyRecord], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def get_enl(db: MeasurementDb, u: Sequence[float],
            current_cell: Optional[str] = None,
            fallback_nl_ms: float = 0.0) -> EnlEstimate:
    """Network-latency estimate at position ``u``: nearest record by 3D distance.

    The search is restricted to the current cell's records when that cell has
    any; otherwise it scans the whole database. Distance ties keep the lowest
    original record index. An empty database yields the configured fallback
    with ``available=False``.
    """
    if not db.records:
        return EnlEstimate(nl_ms=fallback_nl_ms, available=False)
    if current_cell is not None and current_cell in db._cell_index:
        idx = db._cell_index[current_cell]
        pts = db.positions[idx]
    else:
        idx = None
        pts = db.positions
    diff = pts - np.asarray(u, dtype=float)
    d2 = np.einsum("ij,ij->i", diff, diff)
    local = int(np.argmin(d2))  # argmin keeps the lowest index on exact ties
    best_i = local if idx is None else int(idx[local])
    return EnlEstimate(nl_ms=db.records[best_i].nl_ms, available=True, record_index=best_i)


def _dist2d(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _has_los(world: WorldModel, a: Sequence[float], b: Sequence[float]) -> bool:
    d = tuple(y - x for x, y in zip(a, b))
    length = math.sqrt(sum(c * c for c in d))
    if length < 1e-9:
        return True
    unit = tuple(c / length for c in d)
    hit = lidar_range(world, a, unit, max_range=length)
    return hit is None


class CellTracker:
    """Per-session serving-cell state: attachment, handover, link quality.

    Below a station's downtilt altitude the serving cell is simply the nearest
    base station in 2D. Above it, every line-of-sight station competes with a
    seeded random perturbation of its effective gain that grows with altitude,
    which produces the elevated handover churn seen in the measurement flights.
    """

    def __init__(self, world: WorldModel, cfg: RadioConfig, rng: np.random.Generator):
        self.world = world
        self.cfg = cfg
        self.rng = rng
        self.current_cell: Optional[str] = None
        self._last_handover_tick: Optional[int] = None

    def attach(self, u: Sequence[float], tick: int) -> LinkQuality:
        cfg = self.cfg
        stations = self.world.base_stations
        if not stations:
            return LinkQuality(cell_id=None, nl_ms=cfg.fallback_nl_ms,
                               throughput_mbps=0.0, handover=False)
        alt = u[2]
        excess = alt - min(b.downtilt_alt for b in stations)
        if excess <= 0:
            serving = min(stations, key=lambda b: _dist2d(b.position, u))
        else:
            candidates = [b for b in stations if _has_los(self.world, b.position, u)]
            if not candidates:
                candidates = list(stations)
            sigma = cfg.gain_jitter * min(1.0, excess / cfg.jitter_ramp_m)
            jitter = self.rng.normal(0.0, sigma, size=len(candidates))
            scores = [_dist2d(b.position, u) * (1.0 + j)
                      for b, j in zip(candidates, jitter)]
            serving = candidates[int(np.argmin(scores))]

        handover = self.current_cell is not None and serving.id != self.current_cell
        first = self.current_cell is None
        self.current_cell = serving.id
        if handover:
            self._last_handover_tick = tick

        recent_handover = (self._last_handover_tick is not None
                           and tick - self._last_handover_tick < cfg.handover_hold_ticks)
        nl = cfg.base_nl_ms + abs(float(self.rng.normal(0.0, cfg.nl_noise_ms)))
        if recent_handover:
            nl += cfg.handover_penalty_ms
        mean_tp = (cfg.throughput_low_alt_mbps if alt < cfg.alt_threshold_m
                   else cfg.throughput_high_alt_mbps)
        tp = max(0.0, float(self.rng.normal(mean_tp, cfg.throughput_spread_mbps)))
        return LinkQuality(cell_id=serving.id, nl_ms=nl, throughput_mbps=tp,
                           handover=handover and not first)


def generate_measurements(world: WorldModel,
                          trajectory: Sequence[tuple[int, Vec3, float]],
                          cfg: RadioConfig, seed: int,
                          tick_dt: float = 0.01) -> list[LatencyRecord]:
    """One LatencyRecord per trajectory sample (tick, ENU position, speed)."""
    if not trajectory:
        raise ValueError("trajectory must be non-empty")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    tracker = CellTracker(world, cfg, rng)
    out = []
    for tick, pos, _speed in trajectory:
        lq = tracker.attach(pos, tick)
        geo = enu_to_geodetic(pos, world.origin)
        out.append(LatencyRecord(
            lat=geo.lat, lon=geo.lon, alt=geo.alt,
            cell_id=lq.cell_id if lq.cell_id is not None else "none",
            nl_ms=lq.nl_ms, throughput_mbps=lq.throughput_mbps,
            timestamp=tick * tick_dt * 1000.0, enu=tuple(pos)))
    return out
