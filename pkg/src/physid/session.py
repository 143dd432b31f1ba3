"""Simulation sessions: deterministic frame stepping for one body, batch
trajectory export, event scripts, and pointer-to-impulse conversion.

A session owns its state exclusively.  Queued events take effect at the next
frame boundary; each frame runs a fixed number of substeps, so identical
inputs replay to bit-identical trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .camera import DEFAULT_CAMERA, Camera
from .collision import Environment, resolve_all
from .errors import InvalidParameter, MalformedMessage
from .integrator import (DT_FRAME, SUBSTEPS, ForceAccumulator, ImpulseEvent,
                         SoftBodyState, damp_velocities, spatial_impulse_weights,
                         step)
from .mesh import TriMesh, lump_mass
from .pipeline import RIGID, SOFT, SessionSpec
from .rigidbody import RigidState, apply_impulse_rigid, step_rigid
from .softbody import MaterialProperties, StaticMask, apply_static_mask, \
    map_pixels_to_nodes, total_forces

TOUCH_IMPULSE_MAX = 1.0   # N*s at strength 1
TOUCH_RADIUS = 0.15       # m spatial falloff for touch impulses
GRAVITY = np.array([0.0, -9.81, 0.0])


@dataclass(frozen=True)
class SimConfig:
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())
    dt: float = DT_FRAME
    substeps: int = SUBSTEPS
    environment: Environment = field(default_factory=Environment)
    camera: Camera = DEFAULT_CAMERA
    touch_impulse_max: float = TOUCH_IMPULSE_MAX
    touch_radius: float = TOUCH_RADIUS

    def __post_init__(self):
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=np.float64))
        if self.dt <= 0 or self.substeps < 1:
            raise InvalidParameter("dt must be > 0 and substeps >= 1")


@dataclass(frozen=True)
class EventScript:
    """Ordered (frame, event) pairs; frames must be non-decreasing.

    Events: ImpulseEvent, MaterialProperties, or a ("mask", path) tuple whose
    image is loaded with the session camera when it fires.
    """

    events: tuple[tuple[int, object], ...] = ()

    def __post_init__(self):
        frames = [f for f, _ in self.events]
        if any(b < a for a, b in zip(frames, frames[1:])):
            raise InvalidParameter("script frames must be non-decreasing")

    @classmethod
    def from_json(cls, path) -> "EventScript":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        events = []
        for entry in raw.get("events", []):
            frame = int(entry["frame"])
            kind = entry["type"]
            if kind == "impulse":
                target = entry["target"]
                target = int(target) if isinstance(target, int) else np.asarray(
                    target, dtype=np.float64
                )
                events.append((frame, ImpulseEvent(
                    target=target,
                    impulse=np.asarray(entry["impulse"], dtype=np.float64),
                    radius=float(entry.get("radius", 0.0)),
                )))
            elif kind == "set_material":
                if "values" in entry:
                    events.append((frame, MaterialProperties.from_vector(entry["values"])))
                else:
                    events.append((frame, MaterialProperties.from_dict(entry)))
            elif kind == "set_mask":
                events.append((frame, ("mask", entry["file"])))
            else:
                raise InvalidParameter(f"unknown script event type {kind!r}")
        return cls(tuple(events))


class SimulationSession:
    """One body, one exclusive stepping loop."""

    def __init__(self, spec: SessionSpec, config: SimConfig | None = None,
                 session_id: str = "session-0"):
        self.session_id = session_id
        self.config = config or SimConfig()
        self.kind = spec.kind
        self.mesh = spec.mesh
        self.frame = 0
        self._pending: list[tuple[int, object]] = []

        self.mass = spec.mass
        if self.kind == SOFT:
            self.material = spec.material or MaterialProperties(0.5, 0.5, 0.5, 0.5, 0.5)
            self.state = SoftBodyState.at_rest(self.mesh.vertices,
                                               self.mass.inverse_mass)
            self._accumulator = ForceAccumulator.zeros(self.mesh.n_vertices)
            self._gravity_force = self._compute_gravity_force()
        elif self.kind == RIGID:
            if spec.constraint is None:
                raise InvalidParameter("rigid session needs a hinge constraint")
            com = self.mass.center_of_mass
            self.rigid_state = RigidState(
                position=com.copy(),
                orientation=np.array([1.0, 0.0, 0.0, 0.0]),
                linear_velocity=np.zeros(3),
                angular_velocity=np.zeros(3),
                mass=self.mass.total_mass,
                inertia_body=self.mass.inertia_tensor,
            )
            self.constraint = spec.constraint.bind(self.rigid_state)
            self._local_vertices = self.mesh.vertices - com
            # friction/restitution unused: the hinge keeps the body off the
            # environment by construction
        else:
            raise InvalidParameter(f"unknown session kind {spec.kind!r}")

    # -- events ------------------------------------------------------------

    def queue_event(self, event, frame: int | None = None) -> None:
        """Schedule an event; default is the next frame boundary."""
        at = self.frame + 1 if frame is None else int(frame)
        if at <= self.frame:
            at = self.frame + 1
        self._pending.append((at, event))

    def _apply_due_events(self) -> None:
        due = [ev for ev in self._pending if ev[0] <= self.frame]
        self._pending = [ev for ev in self._pending if ev[0] > self.frame]
        for _, event in due:
            self._apply_event(event)

    def _apply_event(self, event) -> None:
        if isinstance(event, ImpulseEvent):
            self._apply_impulse(event)
        elif isinstance(event, MaterialProperties):
            if self.kind != SOFT:
                raise MalformedMessage("set_material only applies to soft sessions")
            self.material = event
        elif isinstance(event, StaticMask):
            self._apply_mask(event)
        elif isinstance(event, tuple) and len(event) == 2 and event[0] == "mask":
            mask = StaticMask.from_file(event[1], self.config.camera)
            self._apply_mask(mask)
        else:
            raise MalformedMessage(f"unsupported event {type(event).__name__}")

    def _apply_impulse(self, event: ImpulseEvent) -> None:
        if self.kind == RIGID:
            if isinstance(event.target, (int, np.integer)):
                contact = self.node_positions()[int(event.target)]
            else:
                contact = np.asarray(event.target, dtype=np.float64)
            self.rigid_state = apply_impulse_rigid(self.rigid_state, event.impulse,
                                                   contact)
            return
        acc = self._accumulator
        if isinstance(event.target, (int, np.integer)):
            acc.impulses[int(event.target)] += event.impulse
        elif event.radius <= 0.0:
            raise InvalidParameter("contact-point impulse needs a positive radius")
        else:
            idx, fractions = spatial_impulse_weights(
                self.state.positions, self.state.inverse_mass, event
            )
            if idx.size:
                acc.impulses[idx] += fractions[:, None] * event.impulse

    def _apply_mask(self, mask: StaticMask) -> None:
        if self.kind != SOFT:
            raise MalformedMessage("set_mask only applies to soft sessions")
        flags = map_pixels_to_nodes(self.mesh, self.state.positions, mask)
        self.mass = apply_static_mask(self.mass, flags)
        self.state.inverse_mass = self.mass.inverse_mass.copy()
        self.state.velocities[flags] = 0.0
        self._gravity_force = self._compute_gravity_force()

    def _compute_gravity_force(self) -> np.ndarray:
        w = self.state.inverse_mass
        mass = np.where(w > 0.0, 1.0 / np.where(w > 0.0, w, 1.0), 0.0)
        return mass[:, None] * self.config.gravity

    # -- stepping ----------------------------------------------------------

    def step_frame(self) -> None:
        self.frame += 1
        self._apply_due_events()
        dt_sub = self.config.dt / self.config.substeps
        if self.kind == SOFT:
            self._step_soft(dt_sub)
        else:
            for _ in range(self.config.substeps):
                self.rigid_state = step_rigid(self.rigid_state, self.constraint,
                                              dt_sub)

    def _step_soft(self, dt_sub: float) -> None:
        state = self.state
        acc = self._accumulator  # impulses queued this frame are already in it
        for _ in range(self.config.substeps):
            acc.forces += self._gravity_force
            acc.forces += total_forces(self.mesh, state.positions, self.material)
            state = damp_velocities(state, self.material.damping_coefficient, dt_sub)
            state = step(state, acc, dt_sub)
            state = resolve_all(state, self.config.environment,
                                self.material.dynamic_friction)
        self.state = state

    # -- observation -------------------------------------------------------

    def node_positions(self) -> np.ndarray:
        if self.kind == SOFT:
            return self.state.positions
        r = self.rigid_state.rotation
        return self._local_vertices @ r.T + self.rigid_state.position

    def node_velocities(self) -> np.ndarray:
        if self.kind == SOFT:
            return self.state.velocities
        r = self.rigid_state.rotation
        arms = self._local_vertices @ r.T
        return np.cross(self.rigid_state.angular_velocity, arms) \
            + self.rigid_state.linear_velocity


def make_soft_session(mesh: TriMesh, material: MaterialProperties,
                      total_mass: float = 1.0,
                      static_flags: np.ndarray | None = None,
                      config: SimConfig | None = None) -> SimulationSession:
    dist = lump_mass(mesh, total_mass)
    if static_flags is not None:
        dist = apply_static_mask(dist, static_flags)
    spec = SessionSpec(kind=SOFT, mesh=mesh, mass=dist, material=material,
                       static_node_flags=static_flags)
    return SimulationSession(spec, config)


# ---------------------------------------------------------------------------
# Batch runner

def run_batch(mesh: TriMesh, material: MaterialProperties, script: EventScript,
              steps: int, dt: float = DT_FRAME, out_path=None,
              config: SimConfig | None = None,
              mask_path=None) -> str:
    """Step a soft session ``steps`` frames, applying script events at their
    frames, and write the per-node trajectory CSV."""
    config = config or SimConfig()
    if dt != config.dt:
        config = replace(config, dt=dt)
    session = make_soft_session(mesh, material, config=config)
    if mask_path is not None:
        session._apply_event(("mask", str(mask_path)))
    for frame, event in script.events:
        session.queue_event(event, frame)

    rows = [_trajectory_rows(session)]
    for _ in range(steps):
        session.step_frame()
        rows.append(_trajectory_rows(session))

    out_path = Path(out_path) if out_path else Path("trajectory.csv")
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("frame,node,x,y,z,vx,vy,vz\n")
        for chunk in rows:
            fh.write(chunk)
    return str(out_path)


def _trajectory_rows(session: SimulationSession) -> str:
    pos = session.node_positions()
    vel = session.node_velocities()
    lines = []
    for i in range(len(pos)):
        lines.append(
            "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
            % (session.frame, i, pos[i, 0], pos[i, 1], pos[i, 2],
               vel[i, 0], vel[i, 1], vel[i, 2])
        )
    return "".join(lines)


# ---------------------------------------------------------------------------
# Pointer input

@dataclass(frozen=True)
class PointerSample:
    x: float
    y: float
    phase: str                 # down | move | up
    strength: float            # [0, 1]
    prev_x: float | None = None
    prev_y: float | None = None


def ray_mesh_intersect(positions: np.ndarray, faces: np.ndarray,
                       origin: np.ndarray, direction: np.ndarray):
    """Nearest ray/triangle hit (Moller-Trumbore); None on a miss."""
    if len(faces) == 0:
        return None
    eps = 1e-9
    v0 = positions[faces[:, 0]]
    e1 = positions[faces[:, 1]] - v0
    e2 = positions[faces[:, 2]] - v0
    h = np.cross(direction, e2)
    a = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(a) > eps
    f = np.where(ok, 1.0 / np.where(ok, a, 1.0), 0.0)
    s = origin - v0
    u = f * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    v = f * (q @ direction)
    t = f * np.einsum("ij,ij->i", e2, q)
    valid = ok & (u >= -eps) & (v >= -eps) & (u + v <= 1.0 + eps) & (t > eps)
    if not valid.any():
        return None
    idx = np.nonzero(valid)[0]
    best = idx[np.argmin(t[idx])]
    t_hit = float(t[best])
    return t_hit, int(best), origin + t_hit * direction


def touch_to_impulse(sample: PointerSample, camera: Camera, mesh: TriMesh,
                     positions: np.ndarray,
                     impulse_max: float = TOUCH_IMPULSE_MAX,
                     radius: float = TOUCH_RADIUS) -> ImpulseEvent | None:
    """Convert a pointer sample into a spatial impulse on the mesh surface.

    The pixel is unprojected to a ray and intersected with the mesh; a miss
    or zero strength yields no event.  Drag direction comes from the
    inter-frame screen motion; a motionless press pushes along the view ray.
    """
    strength = min(max(sample.strength, 0.0), 1.0)
    if strength <= 0.0:
        return None
    origin, direction = camera.pixel_ray(sample.x, sample.y)
    hit = ray_mesh_intersect(positions, mesh.faces, origin, direction)
    if hit is None:
        return None
    _, _, point = hit
    world_dir = None
    if sample.prev_x is not None and sample.prev_y is not None:
        world_dir = camera.screen_motion_to_world(
            sample.x - sample.prev_x, sample.y - sample.prev_y
        )
    if world_dir is None:
        world_dir = direction
    impulse = strength * impulse_max * world_dir
    return ImpulseEvent(target=point, impulse=impulse, radius=radius)
