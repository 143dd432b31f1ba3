"""Time integration: impulses, damping, and the symplectic Euler step.

Velocities update first from external forces and pending impulses, positions
then advance with the *new* velocity.  Nodes with zero inverse mass never
move and keep exactly zero velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NonFiniteInput, NonFiniteState

# Fixed stepping scheme: 60 Hz frames, 4 equal substeps per frame.
DT_FRAME = 1.0 / 60.0
SUBSTEPS = 4
DT_SUB = DT_FRAME / SUBSTEPS

# Velocity damping rate applied per damped substep (1/s).
DAMP_RATE = 10.0


@dataclass
class NodeState:
    """Kinematic state of a single node; inverse_mass 0 marks it static."""

    position: np.ndarray
    velocity: np.ndarray
    inverse_mass: float

    def copy(self) -> "NodeState":
        return NodeState(
            self.position.copy(), self.velocity.copy(), self.inverse_mass
        )


@dataclass
class SoftBodyState:
    """Per-node kinematic state of a deformable body, stored as arrays."""

    positions: np.ndarray     # (n, 3)
    velocities: np.ndarray    # (n, 3)
    inverse_mass: np.ndarray  # (n,)

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    def copy(self) -> "SoftBodyState":
        return SoftBodyState(
            self.positions.copy(), self.velocities.copy(), self.inverse_mass.copy()
        )

    @classmethod
    def at_rest(cls, positions: np.ndarray, inverse_mass: np.ndarray):
        positions = np.array(positions, dtype=np.float64)
        return cls(
            positions=positions,
            velocities=np.zeros_like(positions),
            inverse_mass=np.array(inverse_mass, dtype=np.float64),
        )


@dataclass
class ForceAccumulator:
    """Per-node external forces (N) and pending impulses (N*s) for one step."""

    forces: np.ndarray
    impulses: np.ndarray

    @classmethod
    def zeros(cls, n_nodes: int) -> "ForceAccumulator":
        return cls(np.zeros((n_nodes, 3)), np.zeros((n_nodes, 3)))

    def clear(self) -> None:
        self.forces[:] = 0.0
        self.impulses[:] = 0.0


@dataclass(frozen=True)
class ImpulseEvent:
    """A user interaction turned into physics: either a node-targeted impulse
    (radius 0) or a world-space contact point with triangular spatial falloff.
    """

    target: object          # int node index, or (3,) world point
    impulse: np.ndarray     # (3,) N*s
    radius: float = 0.0     # m; 0 = single node

    def __post_init__(self):
        if not np.all(np.isfinite(self.impulse)):
            raise NonFiniteInput("impulse vector must be finite")
        if self.radius < 0:
            raise InvalidParameter("impulse radius must be >= 0")


def apply_impulse_node(state: NodeState, impulse: np.ndarray) -> NodeState:
    """v' = v + J * inverse_mass; static nodes are returned unchanged."""
    impulse = np.asarray(impulse, dtype=np.float64)
    if not np.all(np.isfinite(impulse)):
        raise NonFiniteInput("impulse vector must be finite")
    out = state.copy()
    if state.inverse_mass > 0.0:
        out.velocity = out.velocity + impulse * state.inverse_mass
    return out


def spatial_impulse_weights(
    positions: np.ndarray, inverse_mass: np.ndarray, event: ImpulseEvent
) -> tuple[np.ndarray, np.ndarray]:
    """Triangular-falloff weights for a contact-point impulse.

    Returns (affected indices, normalized fractions); empty when no movable
    node lies within the event radius.
    """
    point = np.asarray(event.target, dtype=np.float64).reshape(3)
    d = np.linalg.norm(positions - point, axis=1)
    w = np.maximum(0.0, 1.0 - d / event.radius)
    w[inverse_mass == 0.0] = 0.0
    affected = np.nonzero(w > 0.0)[0]
    if affected.size == 0:
        return affected, np.zeros(0)
    return affected, w[affected] / w[affected].sum()


def apply_impulse_spatial(
    state: SoftBodyState, event: ImpulseEvent
) -> tuple[SoftBodyState, np.ndarray]:
    """Distribute an impulse over nodes near a world contact point.

    Weights fall off linearly, w_i = max(0, 1 - d_i/radius), and are
    normalized over the nonzero-weight set so the total applied impulse
    equals event.impulse.  Returns the new state and the affected node
    indices (empty and state unchanged when nothing is in range).
    """
    affected, fractions = spatial_impulse_weights(
        state.positions, state.inverse_mass, event
    )
    if affected.size == 0:
        return state, affected
    out = state.copy()
    scale = fractions * state.inverse_mass[affected]
    out.velocities[affected] += scale[:, None] * event.impulse
    return out, affected


def damp_velocities(state: SoftBodyState, damping: float, dt: float) -> SoftBodyState:
    """Scale velocities by clamp(1 - damping*dt*DAMP_RATE, 0, 1)."""
    if not 0.0 <= damping <= 1.0:
        raise InvalidParameter(f"damping coefficient {damping} outside [0, 1]")
    factor = min(max(1.0 - damping * dt * DAMP_RATE, 0.0), 1.0)
    out = state.copy()
    out.velocities *= factor
    return out


def step(state: SoftBodyState, forces: ForceAccumulator, dt: float) -> SoftBodyState:
    """One symplectic Euler substep; consumes and clears the accumulator."""
    if dt <= 0:
        raise InvalidParameter("dt must be positive")
    w = state.inverse_mass[:, None]
    new_v = state.velocities + (forces.forces * dt + forces.impulses) * w
    movable = state.inverse_mass > 0.0
    new_v[~movable] = 0.0
    new_x = state.positions + new_v * dt
    new_x[~movable] = state.positions[~movable]

    if not (np.all(np.isfinite(new_v)) and np.all(np.isfinite(new_x))):
        bad = np.nonzero(
            ~(np.isfinite(new_v).all(axis=1) & np.isfinite(new_x).all(axis=1))
        )[0]
        node = int(bad[0]) if bad.size else None
        raise NonFiniteState(f"non-finite state at node {node}", node=node)

    forces.clear()
    return SoftBodyState(new_x, new_v, state.inverse_mass)
