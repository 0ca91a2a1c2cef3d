/**
 * Keyboard and gamepad input mapped to a body-frame velocity setpoint.
 *
 * WASD/arrows drive forward-back/left-right, R/F climb and descend, Q/E yaw.
 * A connected gamepad's sticks override the keyboard whenever they are
 * deflected past the dead zone. Space is the stop button.
 */

export interface InputSample {
  setpoint: [number, number, number];
  yawRate: number;
  stop: boolean;
}

const DEAD_ZONE = 0.12;

export class InputTracker {
  cruiseSpeed: number;
  private keys = new Set<string>();
  private stopLatched = false;

  constructor(cruiseSpeed: number) {
    this.cruiseSpeed = cruiseSpeed;
  }

  attach(target: EventTarget): void {
    target.addEventListener("keydown", (e) => this.keyDown(e as KeyboardEvent));
    target.addEventListener("keyup", (e) => this.keyUp(e as KeyboardEvent));
  }

  keyDown(e: KeyboardEvent): void {
    if (e.code === "Space") {
      this.stopLatched = true;
    }
    this.keys.add(e.code);
  }

  keyUp(e: KeyboardEvent): void {
    this.keys.delete(e.code);
  }

  pressStop(): void {
    this.stopLatched = true;
  }

  private axis(pos: string[], neg: string[]): number {
    const p = pos.some((k) => this.keys.has(k)) ? 1 : 0;
    const n = neg.some((k) => this.keys.has(k)) ? 1 : 0;
    return p - n;
  }

  /** Consume the current input state; the stop latch clears on read. */
  sample(gamepad?: Gamepad | null): InputSample {
    const stop = this.stopLatched;
    this.stopLatched = false;

    let fwd = this.axis(["KeyW", "ArrowUp"], ["KeyS", "ArrowDown"]);
    let right = this.axis(["KeyD", "ArrowRight"], ["KeyA", "ArrowLeft"]);
    let up = this.axis(["KeyR"], ["KeyF"]);
    let yaw = this.axis(["KeyE"], ["KeyQ"]);

    if (gamepad) {
      const gx = gamepad.axes[0] ?? 0;
      const gy = gamepad.axes[1] ?? 0;
      const gyaw = gamepad.axes[2] ?? 0;
      const gz = gamepad.axes[3] ?? 0;
      if (Math.abs(gy) > DEAD_ZONE) fwd = -gy;
      if (Math.abs(gx) > DEAD_ZONE) right = gx;
      if (Math.abs(gyaw) > DEAD_ZONE) yaw = gyaw;
      if (Math.abs(gz) > DEAD_ZONE) up = -gz;
      if (gamepad.buttons.some((b) => b.pressed)) {
        return { setpoint: [0, 0, 0], yawRate: 0, stop: true };
      }
    }

    const s = this.cruiseSpeed;
    return {
      setpoint: [fwd * s, right * s, up * s],
      yawRate: yaw * 0.8,
      stop,
    };
  }
}
