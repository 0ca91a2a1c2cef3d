/**
 * 20 Hz command loop: samples input and streams PilotCommands with a strictly
 * increasing seq. Hover (zero setpoint) commands keep flowing when no input is
 * held, so the server always has a live command stream. The stop button
 * bypasses the cadence and goes out immediately.
 */
import { InputSample, InputTracker } from "./input.js";
import { PilotCommand } from "./protocol.js";

export const COMMAND_HZ = 20;

export interface CommandLoopOptions {
  send: (cmd: PilotCommand) => void;
  input: InputTracker;
  now?: () => number;
  setIntervalFn?: typeof setInterval;
  clearIntervalFn?: typeof clearInterval;
  gamepad?: () => Gamepad | null;
}

export class CommandLoop {
  private seq = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly opts: Required<Pick<CommandLoopOptions, "send" | "input">> &
    CommandLoopOptions;
  private readonly now: () => number;
  private readonly epoch: number;

  constructor(opts: CommandLoopOptions) {
    this.opts = opts;
    this.now = opts.now ?? (() => Date.now());
    this.epoch = this.now();
  }

  get nextSeq(): number {
    return this.seq + 1;
  }

  private build(sample: InputSample): PilotCommand {
    this.seq += 1;
    return {
      topic: "cmd",
      seq: this.seq,
      issued_at: this.now() - this.epoch,
      body_velocity: sample.stop ? [0, 0, 0] : sample.setpoint,
      yaw_rate: sample.stop ? 0 : sample.yawRate,
      kind: sample.stop ? "stop" : "motion",
    };
  }

  /** One cadence tick; exposed for tests, normally driven by the interval. */
  tick(): void {
    const pad = this.opts.gamepad ? this.opts.gamepad() : null;
    this.opts.send(this.build(this.opts.input.sample(pad)));
  }

  /** Emergency stop, sent immediately rather than at the next cadence slot. */
  sendStop(): void {
    this.opts.send(this.build({ setpoint: [0, 0, 0], yawRate: 0, stop: true }));
  }

  start(): void {
    if (this.timer !== null) return;
    const set = this.opts.setIntervalFn ?? setInterval;
    this.timer = set(() => this.tick(), 1000 / COMMAND_HZ);
  }

  stop(): void {
    if (this.timer === null) return;
    const clear = this.opts.clearIntervalFn ?? clearInterval;
    clear(this.timer);
    this.timer = null;
  }
}
