import numpy as np
import pytest

from twinlink.geo import (Aabb, BaseStation, Geodetic, WeatherProvider, WeatherRecord,
                          WorldModel)
from twinlink.measurements import LatencyRecord, MeasurementDb

# verdict lines recorded by the acceptance tests; echoed after the run so they
# survive output capture
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def origin():
    return Geodetic(lat=60.18, lon=24.82, alt=0.0)


@pytest.fixture
def open_world(origin):
    return WorldModel(
        origin=origin,
        bounds=Aabb(min=(-100.0, -100.0, 0.0), max=(200.0, 200.0, 150.0)),
        obstacles=(),
        base_stations=(BaseStation(id="bs-0", position=(0.0, -50.0, 25.0)),),
    )


@pytest.fixture
def wall_world(origin):
    """Box spanning x in [5, 6] in front of the default start."""
    return WorldModel(
        origin=origin,
        bounds=Aabb(min=(-100.0, -100.0, 0.0), max=(200.0, 200.0, 150.0)),
        obstacles=(Aabb(min=(5.0, -10.0, 0.0), max=(6.0, 10.0, 30.0)),),
        base_stations=(BaseStation(id="bs-0", position=(0.0, -50.0, 25.0)),),
    )


@pytest.fixture
def calm_weather():
    return WeatherProvider([WeatherRecord(wind=(0.0, 0.0, 0.0), gust_std=0.0)], seed=0)


def make_record(enu, nl_ms, cell_id="c0", origin=Geodetic(lat=60.18, lon=24.82, alt=0.0),
                throughput=30.0, timestamp=0.0):
    from twinlink.geo import enu_to_geodetic
    geo = enu_to_geodetic(enu, origin)
    return LatencyRecord(lat=geo.lat, lon=geo.lon, alt=geo.alt, cell_id=cell_id,
                         nl_ms=nl_ms, throughput_mbps=throughput,
                         timestamp=timestamp, enu=tuple(enu))


def random_db(rng, n=1000, cells=("c0", "c1", "c2"), extent=200.0):
    records = []
    for i in range(n):
        pos = tuple(rng.uniform(-extent, extent, size=3))
        records.append(make_record(pos, nl_ms=float(rng.uniform(5, 80)),
                                   cell_id=cells[int(rng.integers(len(cells)))]))
    return MeasurementDb(records)
