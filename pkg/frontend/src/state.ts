/**
 * Console state: latest-frame mailbox, denial ring buffer, connection status.
 *
 * The mailbox keeps only the newest telemetry frame — the render loop always
 * draws current truth and stale frames are dropped, never queued. Denials are
 * deduplicated by tick so a DeniedStop that arrives both as a dedicated
 * decision message and embedded in telemetry is logged exactly once.
 */
import {
  DecisionMessage,
  ServerMessage,
  TelemetryFrame,
  WorldMessage,
  parseServerMessage,
} from "./protocol.js";

export const DECISION_LOG_CAPACITY = 100;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface DecisionEntry {
  tick: number;
  edl_m: number;
  ld_m: number | null;
  enl_ms: number;
  reason: string;
}

export class ConsoleState {
  status: ConnectionStatus = "connecting";
  world: WorldMessage | null = null;
  latest: TelemetryFrame | null = null;
  decisionLog: DecisionEntry[] = [];
  droppedFrames = 0;

  private seenDenials = new Set<number>();

  /** Feed one raw WebSocket message; returns the parsed message or null. */
  ingest(raw: string): ServerMessage | null {
    const msg = parseServerMessage(raw);
    if (msg === null) {
      this.droppedFrames += 1;
      return null;
    }
    switch (msg.topic) {
      case "world":
        this.world = msg;
        break;
      case "telemetry":
        // the mailbox: overwrite, never queue
        if (this.latest === null || msg.tick >= this.latest.tick) {
          this.latest = msg;
        }
        if (msg.decision !== null && msg.decision.verdict === "denied_stop") {
          this.logDenial({ ...msg.decision, topic: "decision", tick: msg.tick });
        }
        break;
      case "decision":
        this.logDenial(msg);
        break;
      case "error":
        break;
    }
    return msg;
  }

  private logDenial(msg: DecisionMessage): void {
    if (this.seenDenials.has(msg.tick)) return;
    this.seenDenials.add(msg.tick);
    this.decisionLog.push({
      tick: msg.tick,
      edl_m: msg.edl_m,
      ld_m: msg.ld_m,
      enl_ms: msg.enl_ms,
      reason: msg.reason,
    });
    if (this.decisionLog.length > DECISION_LOG_CAPACITY) {
      this.decisionLog.shift();
    }
    // keep the dedup set bounded alongside the ring buffer
    if (this.seenDenials.size > 4 * DECISION_LOG_CAPACITY) {
      const oldest = this.decisionLog[0];
      if (oldest !== undefined) {
        for (const t of this.seenDenials) {
          if (t < oldest.tick) this.seenDenials.delete(t);
        }
      }
    }
  }
}
