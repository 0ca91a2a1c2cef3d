import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinlink.dynamics import (DynamicsConfig, PilotCommand, UavState, body_to_world,
                               forward_component, heading_direction, step, stop_command)
from twinlink.geo import CALM, WindSample


def make_state(position=(0.0, 0.0, 10.0), velocity=(0.0, 0.0, 0.0), heading=0.0, tick=0):
    return UavState(position=position, velocity=velocity, heading=heading, tick=tick)


def fwd(speed, seq=1):
    return PilotCommand(seq=seq, issued_at=0.0, body_velocity_setpoint=(speed, 0.0, 0.0))


CFG = DynamicsConfig(tau=0.3, tick_dt=0.01)


def test_first_order_update_hand_value():
    # v' = 0 + (5 - 0) * (0.01 / 0.3) = 0.16667
    nxt = step(make_state(), fwd(5.0), CALM, CFG)
    assert nxt.velocity[0] == pytest.approx(5.0 * 0.01 / 0.3, abs=1e-4)
    assert nxt.velocity[0] == pytest.approx(0.1667, abs=1e-4)


def test_setpoint_fixed_point():
    st0 = make_state(velocity=(2.0, 0.0, 0.0))
    nxt = step(st0, fwd(2.0), CALM, CFG)
    assert nxt.velocity == pytest.approx(st0.velocity)


def test_stop_decays_within_three_tau():
    state = make_state(velocity=(5.0, 0.0, 0.0))
    stop = stop_command(seq=2, issued_at=0.0)
    ticks = int(3 * CFG.tau / CFG.tick_dt)
    for _ in range(ticks):
        state = step(state, stop, CALM, CFG)
    assert state.speed < 0.05 * 5.0  # exp(-3) ~ 0.0498 of the initial speed
    assert state.speed < 0.05


def test_forward_component_examples():
    state = make_state()
    assert forward_component(PilotCommand(1, 0.0, (3.0, 0.0, 0.0))) == 3.0
    assert forward_component(PilotCommand(1, 0.0, (-2.0, 0.0, 0.0))) == -2.0
    assert forward_component(stop_command(1, 0.0)) == 0.0
    assert forward_component(None) == 0.0


def test_heading_rotates_setpoint():
    v = body_to_world((1.0, 0.0, 0.0), math.pi / 2)
    assert v[0] == pytest.approx(0.0, abs=1e-12)
    assert v[1] == pytest.approx(1.0)


def test_heading_direction_unit():
    d = heading_direction(make_state(heading=0.7))
    assert math.hypot(*d) == pytest.approx(1.0)


def test_yaw_integration():
    cmd = PilotCommand(1, 0.0, (0.0, 0.0, 0.0), yaw_rate=0.5)
    nxt = step(make_state(), cmd, CALM, CFG)
    assert nxt.heading == pytest.approx(0.5 * 0.01)


def test_step_deterministic():
    a = step(make_state(velocity=(1.0, 2.0, 0.0)), fwd(3.0), CALM, CFG)
    b = step(make_state(velocity=(1.0, 2.0, 0.0)), fwd(3.0), CALM, CFG)
    assert a == b  # bit-for-bit


def test_wind_bias():
    wind = WindSample(velocity=(2.0, 0.0, 0.0), gust_std=0.0)
    state = make_state()
    for _ in range(1000):  # converge to the biased setpoint
        state = step(state, fwd(3.0), wind, CFG)
    assert state.velocity[0] == pytest.approx(5.0, abs=1e-3)


@settings(max_examples=50, deadline=None)
@given(speed=st.floats(0.1, 6.0), v0=st.floats(0.0, 6.0))
def test_speed_bounded(speed, v0):
    cfg = DynamicsConfig()
    state = make_state(velocity=(v0, 0.0, 0.0))
    cmd = fwd(min(speed, cfg.v_max))
    for _ in range(200):
        state = step(state, cmd, CALM, cfg)
        assert state.speed <= cfg.v_max + 1e-9


def simulate(commands_at_tick, ticks, cfg=CFG):
    """Replay a {tick: command} schedule with hold-last semantics."""
    state = make_state(position=(0.0, 0.0, 10.0))
    active = None
    trace = []
    for t in range(ticks):
        if t in commands_at_tick:
            active = commands_at_tick[t]
        state = step(state, active, CALM, cfg)
        trace.append(state)
    return trace


def test_latency_shift_property():
    # a command stream delayed by D produces the same trajectory shifted by D;
    # the steady-state positional gap is D * |s|
    speed = 4.0
    delay_ticks = 15  # 150 ms
    ticks = 600
    base = simulate({0: fwd(speed)}, ticks)
    delayed = simulate({delay_ticks: fwd(speed)}, ticks)
    for t in range(delay_ticks, ticks):
        assert delayed[t].position == pytest.approx(base[t - delay_ticks].position, abs=1e-9)
    gap = base[-1].position[0] - delayed[-1].position[0]
    expected = delay_ticks * CFG.tick_dt * speed
    assert abs(gap - expected) <= 2 * CFG.tick_dt * speed


def test_twin_and_physical_share_code_path():
    # identical inputs -> identical trajectories, exactly
    a = simulate({0: fwd(2.5), 100: stop_command(2, 0.0)}, 300)
    b = simulate({0: fwd(2.5), 100: stop_command(2, 0.0)}, 300)
    assert all(x == y for x, y in zip(a, b))


def test_config_validation():
    with pytest.raises(ValueError):
        DynamicsConfig(tau=0.0)
    with pytest.raises(ValueError):
        DynamicsConfig(tau=0.02, tick_dt=0.01)  # tick_dt > tau/3
