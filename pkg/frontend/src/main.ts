/**
 * Browser bootstrap: connect to a running session service, render snapshots
 * onto the canvas, wire pointer gestures and the five material sliders.
 *
 * Configuration via query parameters:
 *   ?host=127.0.0.1&port=8765&mesh=cloth.obj&body=soft
 */

import { GestureTracker, materialMessage } from "./gestures.js";
import {
  ClientMsg, MaterialValues, PROPERTY_NAMES, encodeClientMessage,
  parseServerMessage,
} from "./protocol.js";
import { CanvasDrawTarget, ViewerState } from "./viewer.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? "127.0.0.1";
const port = params.get("port") ?? "8765";
const meshName = params.get("mesh") ?? "cloth.obj";
const body = (params.get("body") ?? "soft") as "soft" | "rigid";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLElement;
const slidersEl = document.getElementById("sliders") as HTMLElement;

const viewer = new ViewerState();
const target = new CanvasDrawTarget(canvas);

const material: MaterialValues = {
  linear_stiffness: 0.4,
  damping_coefficient: 0.4,
  angular_stiffness: 0.2,
  volume_preservation: 0.2,
  dynamic_friction: 0.3,
};

const ws = new WebSocket(`ws://${host}:${port}`);

function send(msg: ClientMsg): void {
  if (ws.readyState === WebSocket.OPEN) ws.send(encodeClientMessage(msg));
}

const gestures = new GestureTracker(send, () => ws.readyState === WebSocket.OPEN);

ws.onopen = () => {
  viewer.status = "open";
  statusEl.textContent = `connected; loading ${meshName}`;
  send({ type: "load", mesh: meshName, body, material });
};

ws.onmessage = (ev) => {
  const msg = parseServerMessage(String(ev.data));
  viewer.accept(msg);
  if (msg.type === "loaded" && viewer.camera) {
    canvas.width = viewer.camera.viewport[0];
    canvas.height = viewer.camera.viewport[1];
    statusEl.textContent = `${msg.nodes} nodes / ${msg.faces.length} faces`;
  } else if (msg.type === "error") {
    statusEl.textContent = `server error: ${viewer.lastError}`;
  }
};

ws.onclose = () => {
  viewer.status = "closed";
  statusEl.textContent = "disconnected (motion frozen)";
  viewer.render(target);
};

function frame(): void {
  viewer.render(target);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

function canvasPos(ev: PointerEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * canvas.width,
    y: ((ev.clientY - rect.top) / rect.height) * canvas.height,
  };
}

canvas.style.touchAction = "none";
canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  const { x, y } = canvasPos(ev);
  gestures.handle({ kind: "down", x, y, timeMs: ev.timeStamp });
});
canvas.addEventListener("pointermove", (ev) => {
  const { x, y } = canvasPos(ev);
  gestures.handle({ kind: "move", x, y, timeMs: ev.timeStamp });
});
for (const kind of ["pointerup", "pointercancel"] as const) {
  canvas.addEventListener(kind, (ev) => {
    const { x, y } = canvasPos(ev);
    gestures.handle({ kind: "up", x, y, timeMs: ev.timeStamp });
  });
}

for (const name of PROPERTY_NAMES) {
  const row = document.createElement("label");
  row.className = "slider-row";
  const text = document.createElement("span");
  text.textContent = name.replace(/_/g, " ");
  const input = document.createElement("input");
  input.type = "range";
  input.min = "0";
  input.max = "1";
  input.step = "0.01";
  input.value = String(material[name]);
  input.addEventListener("input", () => {
    material[name] = Number(input.value);
    send(materialMessage(material));
  });
  row.append(text, input);
  slidersEl.append(row);
}
