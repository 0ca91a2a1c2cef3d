"""Edge server: scripted headless runs and the live WebSocket console endpoint.

Wire protocol (JSON messages, topic-tagged, one WebSocket per pilot session):

  pilot -> server   {"topic": "cmd", "seq": 1, "body_velocity": [x, y, z],
                     "yaw_rate": 0.0, "kind": "motion"}
  server -> pilot   {"topic": "telemetry", ...}    at <= telemetry_hz
                    {"topic": "decision", ...}     on every denial
                    {"topic": "error", "reason"}   on malformed commands
                    {"topic": "world", ...}        once, on connect

Headless mode replays a JSONL command script through the identical tick loop
as fast as possible and writes the flight log; given the same config, script,
and seed it is byte-for-byte reproducible.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import AppConfig, load_config
from .decision import DENIED_STOP
from .dynamics import PilotCommand
from .geo import world_to_dict
from .session import CommandError, Session


def parse_command(raw: dict) -> PilotCommand:
    try:
        return PilotCommand(
            seq=int(raw["seq"]),
            issued_at=float(raw.get("issued_at", 0.0)),
            body_velocity_setpoint=tuple(float(c) for c in raw.get("body_velocity",
                                                                   (0.0, 0.0, 0.0))),
            yaw_rate=float(raw.get("yaw_rate", 0.0)),
            kind=str(raw.get("kind", "motion")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CommandError(f"malformed command: {exc}") from exc


def load_script(path: str) -> list[PilotCommand]:
    commands = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            commands.append(parse_command(json.loads(line)))
    return commands


def run_headless(cfg: AppConfig, script_path: str, out_dir: str,
                 session_id: str = "headless", max_ticks: int = 200_000,
                 tail_ticks: int = 200) -> dict:
    """Replay a command script at full speed; returns the run summary."""
    script = load_script(script_path)
    session = cfg.make_session(session_id)
    dt_ms = cfg.dynamics.tick_dt * 1000.0
    i = 0
    tick = 0
    idle = 0
    while tick < max_ticks:
        now_ms = tick * dt_ms
        due = []
        while i < len(script) and script[i].issued_at <= now_ms:
            due.append(script[i])
            i += 1
        session.run_tick(due)
        tick += 1
        if i >= len(script) and session.link.pending() == 0:
            idle += 1
            if idle >= tail_ticks:
                break
    os.makedirs(out_dir, exist_ok=True)
    session.flight_log.write_jsonl(os.path.join(out_dir, "flight_log.jsonl"))
    summary = session.flight_log.summary()
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


# ---------------------------------------------------------------------------
# live WebSocket service

def create_app(cfg: AppConfig) -> FastAPI:
    app = FastAPI(title="twinlink edge server")
    app.state.cfg = cfg
    app.state.session_count = 0

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.websocket("/ws")
    async def pilot_socket(ws: WebSocket):
        await ws.accept()
        cfg: AppConfig = app.state.cfg
        app.state.session_count += 1
        session_id = ws.query_params.get("session", f"pilot-{app.state.session_count}")
        session = cfg.make_session(session_id)
        await ws.send_text(json.dumps({"topic": "world", "world": world_to_dict(cfg.world),
                                       "tick_dt": cfg.dynamics.tick_dt,
                                       "v_max": cfg.dynamics.v_max}))
        inbox: list[PilotCommand] = []
        stop_event = asyncio.Event()

        async def reader():
            try:
                while True:
                    text = await ws.receive_text()
                    try:
                        msg = json.loads(text)
                        if msg.get("topic") != "cmd":
                            raise CommandError(f"unexpected topic {msg.get('topic')!r}")
                        cmd = parse_command(msg)
                        session.validate(cmd)
                        inbox.append(cmd)
                    except (json.JSONDecodeError, CommandError) as exc:
                        await ws.send_text(json.dumps(
                            {"topic": "error", "reason": str(exc)}))
            except WebSocketDisconnect:
                stop_event.set()
            except Exception:
                stop_event.set()

        reader_task = asyncio.create_task(reader())
        dt = cfg.dynamics.tick_dt
        decimate = max(1, int(round(1.0 / (cfg.server.telemetry_hz * dt))))
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        try:
            while not stop_event.is_set():
                cmds, inbox[:] = list(inbox), []
                frame = session.run_tick(cmds)
                if frame.decision is not None and frame.decision.verdict == DENIED_STOP:
                    payload = frame.to_json()["decision"]
                    payload = {"topic": "decision", "tick": frame.tick, **payload}
                    await ws.send_text(json.dumps(payload))
                if frame.tick % decimate == 0:
                    await ws.send_text(json.dumps(frame.to_json()))
                next_deadline += dt
                delay = next_deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = loop.time()  # fell behind; don't spiral
        except Exception:
            pass
        finally:
            reader_task.cancel()

    return app


def serve(cfg: AppConfig) -> None:
    import uvicorn

    app = create_app(cfg)
    uvicorn.run(app, host=cfg.server.host, port=cfg.server.port, log_level="warning")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="twinlink-server",
                                     description="digital-twin teleoperation edge server")
    parser.add_argument("--config", required=True, help="TOML or JSON config file")
    parser.add_argument("--headless", action="store_true",
                        help="replay a command script instead of serving")
    parser.add_argument("--script", help="JSONL command script (headless mode)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="run-out", help="headless output directory")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, seed=args.seed)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.headless:
        if not args.script:
            print("error: --headless requires --script", file=sys.stderr)
            return 2
        summary = run_headless(cfg, args.script, args.out)
        print(json.dumps(summary, sort_keys=True))
        return 0
    serve(cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
