"""Node-vs-environment collision detection and velocity-level resolution.

The environment is a set of half-spaces (default: the ground plane y = 0).
A contact exists only for strictly negative signed distance; resolution
reflects the approaching normal velocity by the restitution coefficient,
applies a Coulomb-style tangential reduction, and projects the node out of
penetration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter
from .integrator import SoftBodyState


@dataclass(frozen=True)
class Contact:
    node: int
    signed_distance: float  # negative = penetrating
    normal: np.ndarray      # unit, out of the environment surface


@dataclass(frozen=True)
class HalfSpace:
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))
        n = np.asarray(self.normal, dtype=np.float64)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise InvalidParameter("half-space normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)


@dataclass(frozen=True)
class Environment:
    planes: tuple[HalfSpace, ...] = field(
        default_factory=lambda: (HalfSpace((0.0, 0.0, 0.0), (0.0, 1.0, 0.0)),)
    )
    restitution: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.restitution <= 1.0:
            raise InvalidParameter("restitution must be in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "Environment":
        planes = tuple(
            HalfSpace(p["point"], p["normal"]) for p in d.get("planes", [])
        )
        if not planes:
            planes = (HalfSpace((0.0, 0.0, 0.0), (0.0, 1.0, 0.0)),)
        return cls(planes=planes, restitution=float(d.get("restitution", 0.2)))

    @classmethod
    def from_json(cls, path) -> "Environment":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _detect_arrays(state: SoftBodyState, env: Environment):
    """(node indices, depths, unit normals) of the deepest penetration per
    node; empty arrays when nothing penetrates."""
    n = state.n_nodes
    best_d = np.full(n, np.inf)
    best_plane = np.zeros(n, dtype=np.int64)
    for pi, plane in enumerate(env.planes):
        d = (state.positions - plane.point) @ plane.normal
        deeper = d < best_d
        best_d = np.where(deeper, d, best_d)
        best_plane = np.where(deeper, pi, best_plane)
    idx = np.nonzero(best_d < 0.0)[0]
    if idx.size == 0:
        return idx, np.zeros(0), np.zeros((0, 3))
    normals = np.stack([p.normal for p in env.planes])[best_plane[idx]]
    return idx, best_d[idx], normals


def detect(state: SoftBodyState, env: Environment) -> list[Contact]:
    """One contact per penetrating node, against its deepest half-space."""
    idx, depths, normals = _detect_arrays(state, env)
    return [
        Contact(int(i), float(d), n) for i, d, n in zip(idx, depths, normals)
    ]


def _resolve_arrays(state: SoftBodyState, idx: np.ndarray, depths: np.ndarray,
                    normals: np.ndarray, restitution: float,
                    friction: float) -> SoftBodyState:
    out = state.copy()
    v = out.velocities[idx]
    vn_s = np.einsum("ij,ij->i", v, normals)
    v_n = vn_s[:, None] * normals
    v_t = v - v_n
    approaching = vn_s < 0.0
    vn_new = np.where(approaching, -restitution * vn_s, vn_s)
    dv_n = np.where(approaching, (1.0 + restitution) * np.abs(vn_s), 0.0)
    t_speed = np.sqrt(np.einsum("ij,ij->i", v_t, v_t))
    factor = np.maximum(0.0, 1.0 - friction * dv_n / np.maximum(t_speed, 1e-12))
    out.velocities[idx] = vn_new[:, None] * normals + factor[:, None] * v_t
    movable = out.inverse_mass[idx] > 0.0
    out.positions[idx[movable]] += (
        np.abs(depths[movable])[:, None] * normals[movable]
    )
    return out


def resolve(state: SoftBodyState, contacts: list[Contact], restitution: float,
            friction: float) -> SoftBodyState:
    """Adjust velocities by restitution/friction and project out of
    penetration.  No contacts means the input state is returned untouched."""
    if not 0.0 <= restitution <= 1.0:
        raise InvalidParameter("restitution must be in [0, 1]")
    if not 0.0 <= friction <= 1.0:
        raise InvalidParameter("friction must be in [0, 1]")
    if not contacts:
        return state
    idx = np.array([c.node for c in contacts], dtype=np.int64)
    depths = np.array([c.signed_distance for c in contacts])
    normals = np.stack([c.normal for c in contacts])
    return _resolve_arrays(state, idx, depths, normals, restitution, friction)


def resolve_all(state: SoftBodyState, env: Environment, friction: float,
                max_iterations: int = 8) -> SoftBodyState:
    """Detect and resolve until no penetration remains.

    A node inside several half-spaces is only projected out of its deepest
    one per pass, so overlapping planes need a couple of rounds.  Iteration
    is capped; a node wedged between near-opposing planes keeps whatever
    penetration is left after the last pass.
    """
    for _ in range(max_iterations):
        idx, depths, normals = _detect_arrays(state, env)
        if idx.size == 0:
            return state
        state = _resolve_arrays(state, idx, depths, normals, env.restitution,
                                friction)
    return state
