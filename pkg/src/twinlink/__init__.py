"""Digital-twin UAV teleoperation sandbox.

A twin/physical vehicle pair stepped in lockstep behind a delayed command
link, a virtual LiDAR, a latency measurement database with nearest-neighbor
estimation, and the delay-compensated stop gate that approves or denies pilot
commands. See the trial harness (`twinlink.trials`) for the experiment
reproductions and `twinlink.server` for the live console endpoint.
"""

from .decision import APPROVED, DENIED_STOP, Decision, DecisionConfig, compute_edl, decide
from .dynamics import (DynamicsConfig, PilotCommand, UavState, forward_component,
                       heading_direction, step, stop_command)
from .geo import (Aabb, BaseStation, Geodetic, WeatherProvider, WindSample, WorldModel,
                  enu_to_geodetic, geodetic_to_enu, lidar_range)
from .link import CommandLink, InFlightCommand, LinkConfig
from .measurements import (CellTracker, EnlEstimate, LatencyRecord, LinkQuality,
                           MeasurementDb, RadioConfig, generate_measurements, get_enl)
from .session import FlightLog, Session, TelemetryFrame

__version__ = "0.1.0"
