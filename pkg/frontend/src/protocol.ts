/**
 * Wire protocol types plus validation against the shared schema file.
 *
 * Every outbound message goes through `validateClientMessage` before it is
 * sent, so the client can never drift from what the server's own tests pin.
 */

import { WIRE_SCHEMA } from "./generated/schema.js";

export interface MaterialValues {
  linear_stiffness: number;
  damping_coefficient: number;
  angular_stiffness: number;
  volume_preservation: number;
  dynamic_friction: number;
}

export const PROPERTY_NAMES: (keyof MaterialValues)[] = [
  "linear_stiffness",
  "damping_coefficient",
  "angular_stiffness",
  "volume_preservation",
  "dynamic_friction",
];

export type PointerPhase = "down" | "move" | "up";

export type ClientMsg =
  | { type: "load"; mesh: string; body: "soft" | "rigid"; material?: MaterialValues }
  | { type: "pointer"; phase: PointerPhase; x: number; y: number; strength: number }
  | ({ type: "set_material" } & MaterialValues)
  | { type: "set_mask"; png_b64: string };

export interface CameraDescriptor {
  view: number[];
  fov_y_deg: number;
  viewport: [number, number];
}

export type ServerMsg =
  | { type: "state"; frame: number; positions: [number, number, number][] }
  | { type: "loaded"; nodes: number; faces: [number, number, number][]; camera?: CameraDescriptor }
  | { type: "error"; code: string; detail?: string };

// ---------------------------------------------------------------------------
// Minimal validator for the schema subset the wire schema uses:
// type/const/enum/properties/required/additionalProperties:false/items/
// minItems/maxItems/minimum/maximum/minLength/oneOf/$ref.

type Schema = Record<string, unknown>;

const DEFS: Record<string, Schema> = WIRE_SCHEMA.definitions as unknown as Record<
  string,
  Schema
>;

function resolve(schema: Schema): Schema {
  const ref = schema["$ref"];
  if (typeof ref === "string") {
    const name = ref.replace("#/definitions/", "");
    const target = DEFS[name];
    if (!target) throw new Error(`unresolved $ref ${ref}`);
    return resolve(target);
  }
  return schema;
}

function check(schema: Schema, value: unknown, path: string, errors: string[]): void {
  schema = resolve(schema);

  const oneOf = schema["oneOf"] as Schema[] | undefined;
  if (oneOf) {
    const matches = oneOf.filter((alt) => {
      const sub: string[] = [];
      check(alt, value, path, sub);
      return sub.length === 0;
    });
    if (matches.length !== 1) {
      errors.push(`${path}: matched ${matches.length} of ${oneOf.length} alternatives`);
    }
    return;
  }

  if ("const" in schema && value !== schema["const"]) {
    errors.push(`${path}: expected ${JSON.stringify(schema["const"])}`);
    return;
  }
  const allowed = schema["enum"] as unknown[] | undefined;
  if (allowed && !allowed.includes(value)) {
    errors.push(`${path}: not one of ${JSON.stringify(allowed)}`);
    return;
  }

  const kind = schema["type"] as string | undefined;
  if (kind === "object") {
    if (typeof value !== "object" || value === null || Array.isArray(value)) {
      errors.push(`${path}: expected object`);
      return;
    }
    const obj = value as Record<string, unknown>;
    const props = (schema["properties"] ?? {}) as Record<string, Schema>;
    for (const name of (schema["required"] ?? []) as string[]) {
      if (!(name in obj)) errors.push(`${path}: missing ${name}`);
    }
    for (const [name, sub] of Object.entries(props)) {
      if (name in obj) check(sub, obj[name], `${path}.${name}`, errors);
    }
    if (schema["additionalProperties"] === false) {
      for (const name of Object.keys(obj)) {
        if (!(name in props)) errors.push(`${path}: unexpected property ${name}`);
      }
    }
    return;
  }
  if (kind === "array") {
    if (!Array.isArray(value)) {
      errors.push(`${path}: expected array`);
      return;
    }
    const min = schema["minItems"] as number | undefined;
    const max = schema["maxItems"] as number | undefined;
    if (min !== undefined && value.length < min) errors.push(`${path}: too short`);
    if (max !== undefined && value.length > max) errors.push(`${path}: too long`);
    const items = schema["items"] as Schema | undefined;
    if (items) value.forEach((v, i) => check(items, v, `${path}[${i}]`, errors));
    return;
  }
  if (kind === "number" || kind === "integer") {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      errors.push(`${path}: expected ${kind}`);
      return;
    }
    if (kind === "integer" && !Number.isInteger(value)) {
      errors.push(`${path}: expected integer`);
      return;
    }
    const lo = schema["minimum"] as number | undefined;
    const hi = schema["maximum"] as number | undefined;
    if (lo !== undefined && value < lo) errors.push(`${path}: below ${lo}`);
    if (hi !== undefined && value > hi) errors.push(`${path}: above ${hi}`);
    return;
  }
  if (kind === "string") {
    if (typeof value !== "string") {
      errors.push(`${path}: expected string`);
      return;
    }
    const minLen = schema["minLength"] as number | undefined;
    if (minLen !== undefined && value.length < minLen) {
      errors.push(`${path}: shorter than ${minLen}`);
    }
    return;
  }
}

export function validateClientMessage(msg: unknown): string[] {
  const errors: string[] = [];
  check({ $ref: "#/definitions/client_message" }, msg, "$", errors);
  return errors;
}

export function validateServerMessage(msg: unknown): string[] {
  const errors: string[] = [];
  check({ $ref: "#/definitions/server_message" }, msg, "$", errors);
  return errors;
}

/** Serialize after validating; throws on any schema violation. */
export function encodeClientMessage(msg: ClientMsg): string {
  const errors = validateClientMessage(msg);
  if (errors.length > 0) {
    throw new Error(`outbound message violates wire schema: ${errors.join("; ")}`);
  }
  return JSON.stringify(msg);
}

export function parseServerMessage(raw: string): ServerMsg {
  const msg = JSON.parse(raw) as unknown;
  const errors = validateServerMessage(msg);
  if (errors.length > 0) {
    throw new Error(`server message violates wire schema: ${errors.join("; ")}`);
  }
  return msg as ServerMsg;
}
