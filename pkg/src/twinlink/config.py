"""Configuration loading: TOML or JSON config file plus the data files it names.

Sections: world, weather, measurements, dynamics, link, decision, radio,
server, sim. world/weather/measurements accept either a file path or an
inline definition.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from .decision import DecisionConfig
from .dynamics import DynamicsConfig, PilotCommand, UavState
from .geo import (WeatherProvider, WeatherRecord, WorldConfigError, WorldModel,
                  load_world, world_from_dict)
from .link import LinkConfig
from .measurements import MeasurementDb, RadioConfig
from .session import DEFAULT_LIDAR_RANGE_M, Session

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class ServerConfig:
    port: int = 8765
    host: str = "127.0.0.1"
    telemetry_hz: float = 30.0


@dataclass
class AppConfig:
    world: WorldModel
    weather: WeatherProvider
    db: MeasurementDb
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    decision: DecisionConfig = field(default_factory=DecisionConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    lidar_max_range: float = DEFAULT_LIDAR_RANGE_M
    command_rate_hz: float = 20.0
    seed: int = 0

    def make_session(self, session_id: str, seed: Optional[int] = None,
                     initial_state: Optional[UavState] = None,
                     initial_command: Optional[PilotCommand] = None) -> Session:
        return Session(session_id=session_id, world=self.world, weather=self.weather,
                       db=self.db, dynamics=self.dynamics, link_cfg=self.link,
                       decision_cfg=self.decision, radio=self.radio,
                       seed=self.seed if seed is None else seed,
                       initial_state=initial_state, initial_command=initial_command,
                       lidar_max_range=self.lidar_max_range)


def _load_raw(path: str) -> dict:
    try:
        if path.endswith(".toml"):
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise WorldConfigError(f"cannot read config {path}: {exc}") from exc


def _resolve(base_dir: str, value: str) -> str:
    return value if os.path.isabs(value) else os.path.join(base_dir, value)


def load_config(path: str, seed: Optional[int] = None) -> AppConfig:
    raw = _load_raw(path)
    base = os.path.dirname(os.path.abspath(path))
    return config_from_dict(raw, base_dir=base, seed=seed)


def config_from_dict(raw: dict, base_dir: str = ".", seed: Optional[int] = None) -> AppConfig:
    world_spec = raw.get("world")
    if world_spec is None:
        raise WorldConfigError("config is missing the world section")
    world = (load_world(_resolve(base_dir, world_spec)) if isinstance(world_spec, str)
             else world_from_dict(world_spec))

    eff_seed = int(seed if seed is not None else raw.get("sim", {}).get("seed", 0))

    weather_spec = raw.get("weather")
    if weather_spec is None:
        weather = WeatherProvider([WeatherRecord(wind=(0.0, 0.0, 0.0), gust_std=0.0)],
                                  seed=eff_seed)
    elif isinstance(weather_spec, str):
        weather = WeatherProvider.from_file(_resolve(base_dir, weather_spec), seed=eff_seed)
    else:
        records = [WeatherRecord(wind=tuple(r["wind"]), gust_std=float(r.get("gust_std", 0.0)),
                                 pos=tuple(r["pos"]) if r.get("pos") is not None else None)
                   for r in weather_spec]
        weather = WeatherProvider(records, seed=eff_seed)

    meas_spec = raw.get("measurements")
    if meas_spec is None:
        db = MeasurementDb([])
    elif isinstance(meas_spec, str):
        db = MeasurementDb.from_jsonl(_resolve(base_dir, meas_spec), world.origin)
    else:
        raise WorldConfigError("measurements section must be a JSONL path")

    sim = raw.get("sim", {})
    return AppConfig(
        world=world,
        weather=weather,
        db=db,
        dynamics=DynamicsConfig(**raw.get("dynamics", {})),
        link=LinkConfig(**raw.get("link", {})),
        decision=DecisionConfig(**raw.get("decision", {})),
        radio=RadioConfig(**raw.get("radio", {})),
        server=ServerConfig(**raw.get("server", {})),
        lidar_max_range=float(sim.get("lidar_max_range", DEFAULT_LIDAR_RANGE_M)),
        command_rate_hz=float(sim.get("command_rate_hz", 20.0)),
        seed=eff_seed,
    )
