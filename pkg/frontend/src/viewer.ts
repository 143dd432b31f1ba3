/**
 * Thin-client viewer state: keeps the latest snapshot (older frames are
 * dropped, never queued), and draws the wireframe through an abstract draw
 * target so rendering logic is testable without a real canvas.
 */

import { projectAll } from "./camera.js";
import type { CameraDescriptor, ServerMsg } from "./protocol.js";

export type Vec3 = [number, number, number];

export interface DrawTarget {
  clear(): void;
  line(x1: number, y1: number, x2: number, y2: number): void;
  overlay(text: string): void;
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export class ViewerState {
  faces: [number, number, number][] = [];
  camera: CameraDescriptor | null = null;
  positions: Vec3[] = [];
  latestFrame = -1;
  lastDrawnFrame = -1;
  status: ConnectionStatus = "connecting";
  lastError: string | null = null;

  /** Feed one server message; returns true when it changed the state. */
  accept(msg: ServerMsg): boolean {
    if (msg.type === "loaded") {
      this.faces = msg.faces;
      this.camera = msg.camera ?? null;
      return true;
    }
    if (msg.type === "state") {
      if (msg.frame <= this.latestFrame) return false; // stale snapshot
      this.latestFrame = msg.frame;
      this.positions = msg.positions;
      return true;
    }
    this.lastError = `${msg.code}${msg.detail ? `: ${msg.detail}` : ""}`;
    return true;
  }

  /** Rendered frame numbers never decrease; stale frames draw nothing. */
  render(target: DrawTarget): boolean {
    if (this.status === "closed") {
      target.overlay("disconnected");
      return false;
    }
    if (this.camera === null || this.latestFrame <= this.lastDrawnFrame) {
      return false;
    }
    target.clear();
    const projected = projectAll(this.camera, this.positions);
    for (const [a, b, c] of this.faces) {
      const pa = projected[a];
      const pb = projected[b];
      const pc = projected[c];
      if (!pa || !pb || !pc) continue;
      if (!(pa.inFront && pb.inFront && pc.inFront)) continue;
      target.line(pa.x, pa.y, pb.x, pb.y);
      target.line(pb.x, pb.y, pc.x, pc.y);
      target.line(pc.x, pc.y, pa.x, pa.y);
    }
    this.lastDrawnFrame = this.latestFrame;
    return true;
  }
}

export class CanvasDrawTarget implements DrawTarget {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
  }

  clear(): void {
    this.ctx.fillStyle = "#10131a";
    this.ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    this.ctx.strokeStyle = "#7fd4ff";
    this.ctx.lineWidth = 1;
  }

  line(x1: number, y1: number, x2: number, y2: number): void {
    this.ctx.beginPath();
    this.ctx.moveTo(x1, y1);
    this.ctx.lineTo(x2, y2);
    this.ctx.stroke();
  }

  overlay(text: string): void {
    this.ctx.fillStyle = "rgba(0, 0, 0, 0.55)";
    this.ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    this.ctx.fillStyle = "#ff8080";
    this.ctx.font = "20px system-ui, sans-serif";
    this.ctx.textAlign = "center";
    this.ctx.fillText(text, this.canvas.width / 2, this.canvas.height / 2);
  }
}
