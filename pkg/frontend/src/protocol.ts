/**
 * Wire protocol for the edge-server WebSocket: zod schemas for every
 * server->pilot topic plus the pilot->server command shape. The console is a
 * pure protocol client — everything here mirrors the server's JSON, nothing
 * is computed locally.
 */
import { z } from "zod";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);

export const uavStateSchema = z.object({
  pos: vec3,
  vel: vec3,
  heading: z.number(),
  speed: z.number().nonnegative(),
});

export const decisionSchema = z.object({
  verdict: z.enum(["approved", "denied_stop"]),
  edl_m: z.number().nonnegative(),
  ld_m: z.number().nullable(),
  enl_ms: z.number().nonnegative(),
  reason: z.string(),
});

export const telemetrySchema = z.object({
  topic: z.literal("telemetry"),
  tick: z.number().int().positive(),
  twin: uavStateSchema,
  physical: uavStateSchema,
  decision: decisionSchema.nullable(),
  link: z.object({
    cell_id: z.string().nullable(),
    nl_ms: z.number(),
    throughput_mbps: z.number(),
    handover: z.boolean(),
  }),
  ld_m: z.number().nullable(),
  video: z.object({
    frame_seq: z.number().int(),
    bitrate_mbps: z.number(),
  }),
});

const aabbSchema = z.object({ min: vec3, max: vec3 });

export const worldSchema = z.object({
  topic: z.literal("world"),
  world: z.object({
    origin: z.object({ lat: z.number(), lon: z.number(), alt: z.number() }),
    bounds: aabbSchema,
    obstacles: z.array(aabbSchema),
    base_stations: z.array(
      z.object({ id: z.string(), pos: vec3, downtilt_alt: z.number() }),
    ),
  }),
  tick_dt: z.number().positive(),
  v_max: z.number().positive(),
});

export const decisionMsgSchema = decisionSchema.extend({
  topic: z.literal("decision"),
  tick: z.number().int().positive(),
});

export const errorSchema = z.object({
  topic: z.literal("error"),
  reason: z.string(),
});

export const serverMessageSchema = z.discriminatedUnion("topic", [
  telemetrySchema,
  worldSchema,
  decisionMsgSchema,
  errorSchema,
]);

export type UavState = z.infer<typeof uavStateSchema>;
export type TelemetryFrame = z.infer<typeof telemetrySchema>;
export type WorldMessage = z.infer<typeof worldSchema>;
export type DecisionMessage = z.infer<typeof decisionMsgSchema>;
export type ServerMessage = z.infer<typeof serverMessageSchema>;

export interface PilotCommand {
  topic: "cmd";
  seq: number;
  issued_at: number;
  body_velocity: [number, number, number];
  yaw_rate: number;
  kind: "motion" | "stop";
}

export const pilotCommandSchema = z.object({
  topic: z.literal("cmd"),
  seq: z.number().int().positive(),
  issued_at: z.number().nonnegative(),
  body_velocity: vec3,
  yaw_rate: z.number(),
  kind: z.enum(["motion", "stop"]),
});

/** Parse one raw server message; returns null for anything malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  const result = serverMessageSchema.safeParse(data);
  return result.success ? result.data : null;
}
