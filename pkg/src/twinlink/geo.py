"""Static world model: obstacles, base stations, coordinates, virtual LiDAR, wind.

The world is a set of axis-aligned boxes plus base station sites inside a
bounded ENU volume. Geodetic positions are mapped to local ENU meters with an
equirectangular tangent-plane projection (flights here stay well under 1 km,
where the projection error is negligible). The virtual LiDAR is a single
ray cast against the obstacle boxes using the slab method.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Meridian arc length per degree of latitude, meters. Good to <0.1% for the
# sub-kilometer areas this model covers.
M_PER_DEG_LAT = 111_320.0

Vec3 = tuple[float, float, float]


class WorldConfigError(Exception):
    """Raised when a world or weather file is missing, unparsable, or invalid."""


@dataclass(frozen=True)
class Geodetic:
    lat: float  # degrees
    lon: float  # degrees
    alt: float  # meters


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min/max corners in ENU meters."""

    min: Vec3
    max: Vec3

    def __post_init__(self):
        for lo, hi in zip(self.min, self.max):
            if not lo < hi:
                raise WorldConfigError(f"box min must be < max per axis: {self.min} / {self.max}")

    def contains(self, p: Sequence[float]) -> bool:
        return all(lo <= c <= hi for lo, c, hi in zip(self.min, p, self.max))


@dataclass(frozen=True)
class BaseStation:
    id: str
    position: Vec3
    # Altitude above which the down-tilted antenna gain penalty applies and
    # cell selection becomes unstable.
    downtilt_alt: float = 20.0


@dataclass(frozen=True)
class WindSample:
    velocity: Vec3  # m/s, gust included
    gust_std: float  # m/s

    def __post_init__(self):
        if self.gust_std < 0:
            raise WorldConfigError("gust_std must be >= 0")


CALM = WindSample(velocity=(0.0, 0.0, 0.0), gust_std=0.0)


@dataclass(frozen=True)
class WorldModel:
    origin: Geodetic
    bounds: Aabb
    obstacles: tuple[Aabb, ...] = ()
    base_stations: tuple[BaseStation, ...] = ()

    def __post_init__(self):
        for box in self.obstacles:
            if not (self.bounds.contains(box.min) and self.bounds.contains(box.max)):
                raise WorldConfigError(f"obstacle {box} outside world bounds")


def geodetic_to_enu(lat: float, lon: float, alt: float, origin: Geodetic) -> Vec3:
    """Equirectangular geodetic -> local ENU meters around ``origin``."""
    if abs(lat) > 90.0 or abs(lon) > 180.0:
        raise ValueError(f"lat/lon out of range: {lat}, {lon}")
    east = (lon - origin.lon) * M_PER_DEG_LAT * math.cos(math.radians(origin.lat))
    north = (lat - origin.lat) * M_PER_DEG_LAT
    up = alt - origin.alt
    return (east, north, up)


def enu_to_geodetic(pos: Sequence[float], origin: Geodetic) -> Geodetic:
    """Inverse of :func:`geodetic_to_enu`."""
    east, north, up = pos
    lat = origin.lat + north / M_PER_DEG_LAT
    lon = origin.lon + east / (M_PER_DEG_LAT * math.cos(math.radians(origin.lat)))
    return Geodetic(lat=lat, lon=lon, alt=origin.alt + up)


def ray_aabb(origin: Sequence[float], direction: Sequence[float], box: Aabb) -> Optional[float]:
    """Slab-method ray/box intersection.

    Returns the entry distance along the ray (0 if the origin is inside the
    box), or None when the ray misses.
    """
    tmin, tmax = 0.0, math.inf
    for o, d, lo, hi in zip(origin, direction, box.min, box.max):
        if abs(d) < 1e-12:
            if o < lo or o > hi:
                return None
            continue
        t1 = (lo - o) / d
        t2 = (hi - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return None
    return tmin


def lidar_range(world: WorldModel, origin: Sequence[float], direction: Sequence[float],
                max_range: float) -> Optional[float]:
    """Distance to the nearest obstacle along the ray, or None for no hit.

    ``direction`` must be a unit vector; an origin inside a box reads 0.0
    (immediate contact).
    """
    norm = math.sqrt(sum(c * c for c in direction))
    if norm < 1e-12:
        raise ValueError("lidar direction must be non-zero")
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"lidar direction must be unit length, got |d|={norm}")
    if max_range <= 0:
        raise ValueError("max_range must be > 0")
    best: Optional[float] = None
    for box in world.obstacles:
        t = ray_aabb(origin, direction, box)
        if t is not None and (best is None or t < best):
            best = t
    if best is None or best > max_range:
        return None
    return best


@dataclass(frozen=True)
class WeatherRecord:
    wind: Vec3
    gust_std: float
    pos: Optional[Vec3] = None  # None = global record


class WeatherProvider:
    """File-backed wind source with seeded per-tick Gaussian gusts.

    Query shape matches the edge server's weather client: position in, wind
    out. A record with no position applies everywhere; otherwise the nearest
    record wins (ties break toward the lowest record index).
    """

    def __init__(self, records: Sequence[WeatherRecord], seed: int = 0):
        if not records:
            raise WorldConfigError("weather provider needs at least one record")
        self.records = list(records)
        self.seed = int(seed)

    @classmethod
    def from_file(cls, path: str, seed: int = 0) -> "WeatherProvider":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise WorldConfigError(f"cannot load weather file {path}: {exc}") from exc
        records = []
        try:
            for entry in raw:
                pos = tuple(entry["pos"]) if "pos" in entry and entry["pos"] is not None else None
                records.append(WeatherRecord(wind=tuple(entry["wind"]),
                                             gust_std=float(entry.get("gust_std", 0.0)),
                                             pos=pos))
        except (KeyError, TypeError) as exc:
            raise WorldConfigError(f"malformed weather file {path}: {exc}") from exc
        return cls(records, seed=seed)

    def nearest_record(self, position: Sequence[float]) -> WeatherRecord:
        best = None
        best_d = math.inf
        for rec in self.records:
            d = 0.0 if rec.pos is None else sum((a - b) ** 2 for a, b in zip(rec.pos, position))
            if d < best_d:  # strict: ties keep the earlier record
                best, best_d = rec, d
        return best

    def wind_at(self, position: Sequence[float], tick: int) -> WindSample:
        rec = self.nearest_record(position)
        vx, vy, vz = rec.wind
        if rec.gust_std > 0:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, int(tick)]))
            gust = rng.normal(0.0, rec.gust_std, size=3)
            vx, vy, vz = vx + gust[0], vy + gust[1], vz + gust[2]
        return WindSample(velocity=(float(vx), float(vy), float(vz)), gust_std=rec.gust_std)


def load_world(path: str) -> WorldModel:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise WorldConfigError(f"cannot load world file {path}: {exc}") from exc
    return world_from_dict(raw)


def world_from_dict(raw: dict) -> WorldModel:
    try:
        origin = Geodetic(**raw["origin"])
        bounds = Aabb(min=tuple(raw["bounds"]["min"]), max=tuple(raw["bounds"]["max"]))
        obstacles = tuple(Aabb(min=tuple(o["min"]), max=tuple(o["max"]))
                          for o in raw.get("obstacles", []))
        stations = tuple(BaseStation(id=str(b["id"]), position=tuple(b["pos"]),
                                     downtilt_alt=float(b.get("downtilt_alt", 20.0)))
                         for b in raw.get("base_stations", []))
    except (KeyError, TypeError) as exc:
        raise WorldConfigError(f"malformed world definition: {exc}") from exc
    return WorldModel(origin=origin, bounds=bounds, obstacles=obstacles, base_stations=stations)


def world_to_dict(world: WorldModel) -> dict:
    return {
        "origin": {"lat": world.origin.lat, "lon": world.origin.lon, "alt": world.origin.alt},
        "bounds": {"min": list(world.bounds.min), "max": list(world.bounds.max)},
        "obstacles": [{"min": list(o.min), "max": list(o.max)} for o in world.obstacles],
        "base_stations": [{"id": b.id, "pos": list(b.position), "downtilt_alt": b.downtilt_alt}
                          for b in world.base_stations],
    }
