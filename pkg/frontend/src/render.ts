/**
 * Canvas renderer: top-down map with obstacles, base stations, twin and
 * physical markers, the LiDAR ray, and the stop-gate arc (threshold + latency
 * margin) ahead of the twin; an altitude strip and latency/throughput gauges
 * alongside. Drawing targets a minimal 2D-context surface so the scene can be
 * exercised headlessly in tests.
 */
import { TelemetryFrame, WorldMessage } from "./protocol.js";
import { ConsoleState } from "./state.js";

/** The subset of CanvasRenderingContext2D the scene needs. */
export interface DrawSurface {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Viewport {
  width: number;
  height: number;
}

interface MapTransform {
  toX(x: number): number;
  toY(y: number): number;
  scale: number;
}

function mapTransform(world: WorldMessage, vp: Viewport): MapTransform {
  const [minX, minY] = world.world.bounds.min;
  const [maxX, maxY] = world.world.bounds.max;
  const mapW = vp.width * 0.72; // right margin holds gauges and the strip
  const scale = Math.min(mapW / (maxX - minX), vp.height / (maxY - minY));
  return {
    toX: (x) => (x - minX) * scale,
    // canvas y grows downward; world north stays up
    toY: (y) => vp.height - (y - minY) * scale,
    scale,
  };
}

export function drawScene(
  ctx: DrawSurface,
  vp: Viewport,
  state: ConsoleState,
  displayThresholdM = 1.0,
): void {
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, vp.width, vp.height);
  if (state.world === null) {
    ctx.fillStyle = "#8899aa";
    ctx.fillText("waiting for world…", 16, 24);
    return;
  }
  const t = mapTransform(state.world, vp);

  for (const o of state.world.world.obstacles) {
    ctx.fillStyle = "#5a4632";
    ctx.fillRect(
      t.toX(o.min[0]),
      t.toY(o.max[1]),
      (o.max[0] - o.min[0]) * t.scale,
      (o.max[1] - o.min[1]) * t.scale,
    );
  }
  for (const bs of state.world.world.base_stations) {
    ctx.strokeStyle = "#4f8fba";
    ctx.beginPath();
    ctx.arc(t.toX(bs.pos[0]), t.toY(bs.pos[1]), 5, 0, 2 * Math.PI);
    ctx.stroke();
  }

  const frame = state.latest;
  if (frame === null) return;

  drawUav(ctx, t, frame.physical, "#c46a6a"); // trails by the link latency
  drawUav(ctx, t, frame.twin, "#6ac48a");
  drawGate(ctx, t, frame, displayThresholdM);
  drawLidarRay(ctx, t, frame);
  drawAltitudeStrip(ctx, vp, state.world, frame);
  drawGauges(ctx, vp, frame);
}

function drawUav(
  ctx: DrawSurface,
  t: MapTransform,
  uav: TelemetryFrame["twin"],
  color: string,
): void {
  const x = t.toX(uav.pos[0]);
  const y = t.toY(uav.pos[1]);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, 6, 0, 2 * Math.PI);
  ctx.fill();
  // nose line shows heading
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.moveTo(x, y);
  ctx.lineTo(x + 12 * Math.cos(uav.heading), y - 12 * Math.sin(uav.heading));
  ctx.stroke();
}

function drawGate(
  ctx: DrawSurface,
  t: MapTransform,
  frame: TelemetryFrame,
  thresholdM: number,
): void {
  const edl = frame.decision?.edl_m ?? 0;
  const radius = (thresholdM + edl) * t.scale;
  const x = t.toX(frame.twin.pos[0]);
  const y = t.toY(frame.twin.pos[1]);
  const denied = frame.decision?.verdict === "denied_stop";
  ctx.strokeStyle = denied ? "#e5484d" : "#d8c24a";
  ctx.lineWidth = denied ? 3 : 1.5;
  ctx.beginPath();
  // arc spans ±60° around the heading, ahead of the twin
  ctx.arc(x, y, radius, -frame.twin.heading - Math.PI / 3, -frame.twin.heading + Math.PI / 3);
  ctx.stroke();
  ctx.lineWidth = 1;
}

function drawLidarRay(ctx: DrawSurface, t: MapTransform, frame: TelemetryFrame): void {
  if (frame.ld_m === null) return;
  const x = t.toX(frame.twin.pos[0]);
  const y = t.toY(frame.twin.pos[1]);
  ctx.strokeStyle = "#9a7fd1";
  ctx.beginPath();
  ctx.moveTo(x, y);
  ctx.lineTo(
    x + frame.ld_m * t.scale * Math.cos(frame.twin.heading),
    y - frame.ld_m * t.scale * Math.sin(frame.twin.heading),
  );
  ctx.stroke();
}

function drawAltitudeStrip(
  ctx: DrawSurface,
  vp: Viewport,
  world: WorldMessage,
  frame: TelemetryFrame,
): void {
  const x0 = vp.width * 0.75;
  const h = vp.height * 0.6;
  const maxAlt = world.world.bounds.max[2];
  ctx.strokeStyle = "#44506a";
  ctx.strokeRect(x0, 20, 18, h);
  const mark = (alt: number, color: string) => {
    const y = 20 + h - (alt / maxAlt) * h;
    ctx.fillStyle = color;
    ctx.fillRect(x0, y - 2, 18, 4);
  };
  mark(frame.physical.pos[2], "#c46a6a");
  mark(frame.twin.pos[2], "#6ac48a");
  ctx.fillStyle = "#8899aa";
  ctx.fillText(`${frame.twin.pos[2].toFixed(1)} m`, x0 + 24, 32);
}

function drawGauges(ctx: DrawSurface, vp: Viewport, frame: TelemetryFrame): void {
  const x0 = vp.width * 0.75;
  let y = vp.height * 0.68;
  ctx.fillStyle = "#cdd6e4";
  ctx.font = "13px monospace";
  const rows = [
    `speed  ${frame.twin.speed.toFixed(2)} m/s`,
    `NL     ${frame.link.nl_ms.toFixed(1)} ms`,
    `thrpt  ${frame.link.throughput_mbps.toFixed(1)} Mbps`,
    `cell   ${frame.link.cell_id ?? "—"}${frame.link.handover ? " (handover)" : ""}`,
    `LD     ${frame.ld_m === null ? "∞" : frame.ld_m.toFixed(2) + " m"}`,
    `video  ${frame.video.bitrate_mbps.toFixed(1)} Mbps`,
  ];
  for (const row of rows) {
    ctx.fillText(row, x0, y);
    y += 18;
  }
}

export interface RenderLoopOptions {
  draw: () => void;
  hz?: number;
  setIntervalFn?: typeof setInterval;
  clearIntervalFn?: typeof clearInterval;
}

/**
 * Paces drawing at a fixed rate (default 30 Hz, comfortably above the 10 Hz
 * floor) and counts completed frames so the achieved rate is observable.
 */
export class RenderLoop {
  framesDrawn = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private readonly opts: RenderLoopOptions) {}

  start(): void {
    if (this.timer !== null) return;
    const set = this.opts.setIntervalFn ?? setInterval;
    this.timer = set(() => {
      this.opts.draw();
      this.framesDrawn += 1;
    }, 1000 / (this.opts.hz ?? 30));
  }

  stop(): void {
    if (this.timer === null) return;
    (this.opts.clearIntervalFn ?? clearInterval)(this.timer);
    this.timer = null;
  }
}
