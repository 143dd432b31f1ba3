/**
 * Pointer gestures and slider changes -> protocol messages.
 *
 * Move messages are throttled to at most 60/s and suppressed when the
 * pointer has not moved.  Strength is the clamped drag speed relative to
 * SPEED_MAX; events arriving while disconnected are dropped and counted so
 * the UI can show an indicator.
 */

import type { ClientMsg, MaterialValues } from "./protocol.js";

export const SPEED_MAX = 2000; // px/s mapping to full strength
export const MIN_MOVE_INTERVAL_MS = 1000 / 60;

export interface PointerEventLike {
  kind: "down" | "move" | "up";
  x: number;
  y: number;
  timeMs: number;
}

export class GestureTracker {
  private down = false;
  private lastX = 0;
  private lastY = 0;
  private lastTimeMs = 0;
  private lastMoveSentMs = -Infinity;
  droppedWhileDisconnected = 0;

  constructor(
    private send: (msg: ClientMsg) => void,
    private isConnected: () => boolean,
  ) {}

  handle(ev: PointerEventLike): void {
    if (!this.isConnected()) {
      this.droppedWhileDisconnected += 1;
      return;
    }
    if (ev.kind === "down") {
      this.down = true;
      this.lastX = ev.x;
      this.lastY = ev.y;
      this.lastTimeMs = ev.timeMs;
      this.lastMoveSentMs = -Infinity;
      this.send({
        type: "pointer", phase: "down",
        x: Math.round(ev.x), y: Math.round(ev.y), strength: 1.0,
      });
      return;
    }
    if (ev.kind === "move") {
      if (!this.down) return;
      const dx = ev.x - this.lastX;
      const dy = ev.y - this.lastY;
      if (dx === 0 && dy === 0) return;
      if (ev.timeMs - this.lastMoveSentMs < MIN_MOVE_INTERVAL_MS) return;
      const dt = Math.max(ev.timeMs - this.lastTimeMs, 1) / 1000;
      const speed = Math.hypot(dx, dy) / dt;
      const strength = Math.min(Math.max(speed / SPEED_MAX, 0), 1);
      this.send({
        type: "pointer", phase: "move",
        x: Math.round(ev.x), y: Math.round(ev.y), strength,
      });
      this.lastMoveSentMs = ev.timeMs;
      this.lastX = ev.x;
      this.lastY = ev.y;
      this.lastTimeMs = ev.timeMs;
      return;
    }
    if (this.down) {
      this.down = false;
      this.send({
        type: "pointer", phase: "up",
        x: Math.round(ev.x), y: Math.round(ev.y), strength: 0.0,
      });
    }
  }
}

/** Sliders always ship the full five-value vector, never a partial update. */
export function materialMessage(values: MaterialValues): ClientMsg {
  return {
    type: "set_material",
    linear_stiffness: values.linear_stiffness,
    damping_coefficient: values.damping_coefficient,
    angular_stiffness: values.angular_stiffness,
    volume_preservation: values.volume_preservation,
    dynamic_friction: values.dynamic_friction,
  };
}
