/**
 * Browser entry point: wires the WebSocket, input tracker, command loop, and
 * render loop together. Connection parameters come from the URL query string
 * (?host=…&port=…&session=…&cruise=…).
 */
import { CommandLoop } from "./commandLoop.js";
import { InputTracker } from "./input.js";
import { PilotCommand } from "./protocol.js";
import { DrawSurface, RenderLoop, drawScene } from "./render.js";
import { ConsoleState } from "./state.js";

const RECONNECT_DELAY_MS = 2000;

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

function renderDecisionLog(state: ConsoleState, el: HTMLElement): void {
  const rows = state.decisionLog
    .slice()
    .reverse()
    .map(
      (d) =>
        `<div class="denied">tick ${d.tick} — stop: ` +
        `LD ${d.ld_m === null ? "∞" : d.ld_m.toFixed(2)} m ≤ gate ` +
        `(margin ${d.edl_m.toFixed(2)} m, est. NL ${d.enl_ms.toFixed(0)} ms)</div>`,
    );
  el.innerHTML = rows.join("");
}

function main(): void {
  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d") as unknown as DrawSurface;
  const banner = document.getElementById("banner") as HTMLElement;
  const logEl = document.getElementById("decision-log") as HTMLElement;
  const stopBtn = document.getElementById("stop") as HTMLButtonElement;

  const host = param("host", window.location.hostname || "localhost");
  const port = param("port", "8765");
  const session = param("session", `pilot-${Date.now()}`);
  const cruise = Number(param("cruise", "3"));

  const state = new ConsoleState();
  const input = new InputTracker(cruise);
  input.attach(window);

  let ws: WebSocket | null = null;
  let loop: CommandLoop | null = null;

  const send = (cmd: PilotCommand) => {
    if (ws !== null && ws.readyState === WebSocket.OPEN) {
      ws.send(JSON.stringify(cmd));
    }
  };

  const connect = () => {
    banner.textContent = `connecting to ${host}:${port}…`;
    banner.className = "banner connecting";
    state.status = "connecting";
    ws = new WebSocket(`ws://${host}:${port}/ws?session=${session}`);

    ws.onopen = () => {
      state.status = "connected";
      banner.textContent = `session ${session}`;
      banner.className = "banner connected";
      loop = new CommandLoop({ send, input, gamepad: () => navigator.getGamepads()[0] ?? null });
      loop.start();
    };
    ws.onmessage = (ev) => {
      state.ingest(String(ev.data));
      renderDecisionLog(state, logEl);
    };
    ws.onclose = () => {
      state.status = "disconnected";
      banner.textContent = "disconnected — retrying…";
      banner.className = "banner disconnected";
      loop?.stop(); // input disabled until reconnect
      loop = null;
      setTimeout(connect, RECONNECT_DELAY_MS);
    };
  };

  stopBtn.addEventListener("click", () => {
    input.pressStop();
    loop?.sendStop(); // out of cadence, straight onto the wire
  });
  window.addEventListener("keydown", (e) => {
    if (e.code === "Space") loop?.sendStop();
  });

  const render = new RenderLoop({
    draw: () => drawScene(ctx, { width: canvas.width, height: canvas.height }, state),
  });
  render.start();
  connect();
}

window.addEventListener("DOMContentLoaded", main);
