"""Unified rigid body with a hinge + cone-twist constraint.

One body per object: a pose (position + quaternion), velocities, mass and a
body-frame inertia tensor.  A torsional spring-damper at the hinge produces
the restoring oscillation; after each integration step the anchor point is
re-pinned and the orientation clamped to the swing/twist limits.

Quaternions are (w, x, y, z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameter, NonFiniteInput, NonFiniteState
from .mesh import TriMesh

UP = np.array([0.0, 1.0, 0.0])

DEFAULT_SWING_LIMIT_DEG = 30.0
DEFAULT_TWIST_LIMIT_DEG = 10.0
DEFAULT_STIFFNESS = 2.0   # N*m/rad
DEFAULT_DAMPING = 0.5     # N*m*s/rad


# ---------------------------------------------------------------------------
# Quaternion helpers

def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n == 0.0:
        raise InvalidParameter("zero quaternion")
    return q / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    half = angle / 2.0
    return np.concatenate([[math.cos(half)], math.sin(half) * axis])


def quat_from_rotvec(rv: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(rv))
    if angle < 1e-12:
        # first-order expansion keeps the step exact for tiny rotations
        q = np.concatenate([[1.0], 0.5 * rv])
        return quat_normalize(q)
    return quat_from_axis_angle(rv / angle, angle)


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return quat_to_matrix(q) @ v


def swing_twist_decompose(q: np.ndarray, axis: np.ndarray):
    """Split q into swing (about an axis perpendicular to ``axis``) and twist
    (about ``axis``) with q = swing * twist.  Both come back sign-normalized
    (w >= 0)."""
    q = quat_normalize(np.asarray(q, dtype=np.float64))
    if q[0] < 0:
        q = -q
    axis = np.asarray(axis, dtype=np.float64)
    proj = np.dot(q[1:], axis) * axis
    twist = np.concatenate([[q[0]], proj])
    tn = np.linalg.norm(twist)
    if tn < 1e-12:
        twist = np.array([1.0, 0.0, 0.0, 0.0])  # pure 180-degree swing
    else:
        twist = twist / tn
    if twist[0] < 0:
        twist = -twist
    swing = quat_multiply(q, quat_conjugate(twist))
    if swing[0] < 0:
        swing = -swing
    return swing, twist


def swing_angle_axis(swing: np.ndarray):
    """Principal rotation angle in [0, pi] and unit axis of a swing quaternion
    (axis is None at zero angle)."""
    vec_norm = float(np.linalg.norm(swing[1:]))
    angle = 2.0 * math.atan2(vec_norm, float(swing[0]))
    if vec_norm < 1e-15:
        return angle, None
    return angle, swing[1:] / vec_norm


def twist_angle(twist: np.ndarray, axis: np.ndarray) -> float:
    """Signed rotation of a twist quaternion about ``axis``, in (-pi, pi]."""
    return 2.0 * math.atan2(float(np.dot(twist[1:], axis)), float(twist[0]))


# ---------------------------------------------------------------------------
# State and constraint types

@dataclass
class RigidState:
    """Pose + velocity of a single unified rigid body."""

    position: np.ndarray          # (3,) center of mass, m
    orientation: np.ndarray       # (4,) unit quaternion (w, x, y, z)
    linear_velocity: np.ndarray   # (3,) m/s
    angular_velocity: np.ndarray  # (3,) rad/s
    mass: float                   # kg
    inertia_body: np.ndarray      # (3, 3) kg*m^2, body frame

    def __post_init__(self):
        self.orientation = quat_normalize(np.asarray(self.orientation, dtype=np.float64))
        self.inertia_body = np.asarray(self.inertia_body, dtype=np.float64)
        if not np.allclose(self.inertia_body, self.inertia_body.T, atol=1e-9):
            raise InvalidParameter("inertia tensor must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia_body) <= 0):
            raise InvalidParameter("inertia tensor must be positive definite")

    def copy(self) -> "RigidState":
        # already-validated fields; skip __post_init__'s eigen check
        out = object.__new__(RigidState)
        out.position = self.position.copy()
        out.orientation = self.orientation.copy()
        out.linear_velocity = self.linear_velocity.copy()
        out.angular_velocity = self.angular_velocity.copy()
        out.mass = self.mass
        out.inertia_body = self.inertia_body
        return out

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    @property
    def inertia_world(self) -> np.ndarray:
        r = self.rotation
        return r @ self.inertia_body @ r.T


@dataclass(frozen=True)
class HingeConeConstraint:
    """Hinge anchor with conical swing and bounded twist about the rest axis.

    ``anchor_local`` is the anchor expressed in the body frame; bind() fills
    it from a state so the point initially at the anchor stays pinned.
    """

    anchor: np.ndarray
    rest_axis: np.ndarray
    swing_limit: float            # rad, cone half-angle
    twist_limit: float            # rad
    restoring_stiffness: float    # N*m/rad
    restoring_damping: float      # N*m*s/rad
    anchor_local: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 < self.swing_limit <= math.pi / 2):
            raise InvalidParameter("swing_limit must be in (0, pi/2]")
        if self.twist_limit < 0 or self.restoring_stiffness < 0 or self.restoring_damping < 0:
            raise InvalidParameter("constraint parameters must be non-negative")
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=np.float64))
        axis = np.asarray(self.rest_axis, dtype=np.float64)
        object.__setattr__(self, "rest_axis", axis / np.linalg.norm(axis))

    def bind(self, state: RigidState) -> "HingeConeConstraint":
        local = state.rotation.T @ (self.anchor - state.position)
        return replace(self, anchor_local=local)

    @classmethod
    def from_config(cls, anchor, rest_axis=UP, config: dict | None = None):
        config = config or {}
        return cls(
            anchor=anchor,
            rest_axis=rest_axis,
            swing_limit=math.radians(config.get("swing_limit_deg", DEFAULT_SWING_LIMIT_DEG)),
            twist_limit=math.radians(config.get("twist_limit_deg", DEFAULT_TWIST_LIMIT_DEG)),
            restoring_stiffness=config.get("restoring_stiffness", DEFAULT_STIFFNESS),
            restoring_damping=config.get("restoring_damping", DEFAULT_DAMPING),
        )


# ---------------------------------------------------------------------------
# Operations

def apply_impulse_rigid(state: RigidState, impulse: np.ndarray,
                        contact: np.ndarray) -> RigidState:
    """Linear kick J/m plus angular kick I_world^-1 (r x J) about the lever
    arm r from the center of mass to the contact point."""
    impulse = np.asarray(impulse, dtype=np.float64)
    contact = np.asarray(contact, dtype=np.float64)
    if not (np.all(np.isfinite(impulse)) and np.all(np.isfinite(contact))):
        raise NonFiniteInput("impulse and contact point must be finite")
    out = state.copy()
    out.linear_velocity = out.linear_velocity + impulse / state.mass
    r = contact - state.position
    out.angular_velocity = out.angular_velocity + np.linalg.solve(
        state.inertia_world, np.cross(r, impulse)
    )
    return out


def clamp_cone_twist(orientation: np.ndarray,
                     constraint: HingeConeConstraint) -> np.ndarray:
    """Clamp swing to the cone half-angle and twist to its bound; idempotent."""
    swing, twist = swing_twist_decompose(orientation, constraint.rest_axis)
    angle, axis = swing_angle_axis(swing)
    changed = False
    if angle > constraint.swing_limit and axis is not None:
        swing = quat_from_axis_angle(axis, constraint.swing_limit)
        changed = True
    t_angle = twist_angle(twist, constraint.rest_axis)
    if abs(t_angle) > constraint.twist_limit:
        t_clamped = math.copysign(constraint.twist_limit, t_angle)
        twist = quat_from_axis_angle(constraint.rest_axis, t_clamped)
        changed = True
    if not changed:
        return quat_normalize(np.asarray(orientation, dtype=np.float64))
    return quat_normalize(quat_multiply(swing, twist))


def swing_angle_of(orientation: np.ndarray, constraint: HingeConeConstraint) -> float:
    swing, _ = swing_twist_decompose(orientation, constraint.rest_axis)
    angle, _ = swing_angle_axis(swing)
    return angle


def _pin_anchor(state: RigidState, constraint: HingeConeConstraint) -> None:
    state.position = constraint.anchor - state.rotation @ constraint.anchor_local


def step_rigid(state: RigidState, constraint: HingeConeConstraint,
               dt: float) -> RigidState:
    """Advance the hinged body one substep.

    Restoring torque -stiffness*swing - damping*w, symplectic update of
    angular velocity then orientation, anchor re-pinning, cone/twist clamp.
    The linear velocity is slaved to the hinge kinematics afterwards.
    """
    if dt <= 0:
        raise InvalidParameter("dt must be positive")
    if constraint.anchor_local is None:
        raise InvalidParameter("constraint not bound to a body; call bind() first")
    out = state.copy()

    swing, _ = swing_twist_decompose(out.orientation, constraint.rest_axis)
    angle, axis = swing_angle_axis(swing)
    torque = -constraint.restoring_damping * out.angular_velocity
    if axis is not None:
        torque = torque - constraint.restoring_stiffness * angle * axis

    out.angular_velocity = out.angular_velocity + np.linalg.solve(
        out.inertia_world, torque
    ) * dt
    out.orientation = quat_normalize(
        quat_multiply(quat_from_rotvec(out.angular_velocity * dt), out.orientation)
    )
    _pin_anchor(out, constraint)
    out.orientation = clamp_cone_twist(out.orientation, constraint)
    _pin_anchor(out, constraint)
    out.linear_velocity = np.cross(out.angular_velocity,
                                   out.position - constraint.anchor)

    if not (np.all(np.isfinite(out.position))
            and np.all(np.isfinite(out.orientation))
            and np.all(np.isfinite(out.angular_velocity))):
        raise NonFiniteState("rigid step produced a non-finite state")
    return out


def choose_hinge_anchor(mesh: TriMesh, config: dict | None = None) -> HingeConeConstraint:
    """Anchor at the centroid of the vertices in the lowest 5% of the mesh's
    vertical extent (all vertices when the extent is zero), axis = world up."""
    ys = mesh.vertices[:, 1]
    y_min, y_max = float(ys.min()), float(ys.max())
    extent = y_max - y_min
    if extent <= 0.0:
        band = np.ones(len(ys), dtype=bool)
    else:
        band = ys <= y_min + 0.05 * extent
    anchor = mesh.vertices[band].mean(axis=0)
    return HingeConeConstraint.from_config(anchor=anchor, rest_axis=UP, config=config)
