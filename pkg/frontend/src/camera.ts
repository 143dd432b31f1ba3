/**
 * Pinhole projection mirroring the server: row-major world->camera view
 * matrix, camera looking down -Z with +Y up, pixel origin top-left.
 */

import type { CameraDescriptor } from "./protocol.js";

export type Vec3 = [number, number, number];

export interface ProjectedPoint {
  x: number;
  y: number;
  inFront: boolean;
}

export function projectPoint(camera: CameraDescriptor, p: Vec3): ProjectedPoint {
  const v = camera.view;
  const cx = v[0] * p[0] + v[1] * p[1] + v[2] * p[2] + v[3];
  const cy = v[4] * p[0] + v[5] * p[1] + v[6] * p[2] + v[7];
  const cz = v[8] * p[0] + v[9] * p[1] + v[10] * p[2] + v[11];
  const inFront = cz < 0;
  const depth = inFront ? -cz : 1;
  const [width, height] = camera.viewport;
  const tan = Math.tan(((camera.fov_y_deg / 2) * Math.PI) / 180);
  const aspect = width / height;
  const xNdc = cx / (depth * tan * aspect);
  const yNdc = cy / (depth * tan);
  return {
    x: ((xNdc + 1) / 2) * width,
    y: ((1 - yNdc) / 2) * height,
    inFront,
  };
}

export function projectAll(camera: CameraDescriptor, points: Vec3[]): ProjectedPoint[] {
  return points.map((p) => projectPoint(camera, p));
}
