"""Internal force model for deformable bodies and semantic static masking.

The five material scalars are dimensionless knobs in [0, 1]; they scale the
documented unit-bearing constants below.  Every force field here is the
negative gradient of its energy counterpart (``*_energy``), which the test
suite verifies against central finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .camera import Camera
from ._kernels import bending_kernel, spring_kernel, volume_kernel
from .errors import EmptyMask, InvalidParameter
from .mesh import MassDistribution, TriMesh, dihedral_angles, enclosed_volume

K_LIN = 500.0   # N/m edge-spring stiffness at linear_stiffness = 1
K_ANG = 0.02    # N*m/rad dihedral stiffness at angular_stiffness = 1
K_VOL = 100.0   # N/m^2 pressure per unit relative volume deficit at kV = 1

PROPERTY_NAMES = (
    "linear_stiffness",
    "damping_coefficient",
    "angular_stiffness",
    "volume_preservation",
    "dynamic_friction",
)

STATIC_THRESHOLD = 128  # 8-bit mask value at/above which a pixel pins nodes


@dataclass(frozen=True)
class MaterialProperties:
    """The five soft-body calibration scalars, each in [0, 1]."""

    linear_stiffness: float
    damping_coefficient: float
    angular_stiffness: float
    volume_preservation: float
    dynamic_friction: float

    def __post_init__(self):
        for name in PROPERTY_NAMES:
            v = getattr(self, name)
            if not (np.isfinite(v) and 0.0 <= v <= 1.0):
                raise InvalidParameter(f"{name}={v!r} outside [0, 1]")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PROPERTY_NAMES])

    @classmethod
    def from_vector(cls, values) -> "MaterialProperties":
        values = [float(v) for v in values]
        if len(values) != 5:
            raise InvalidParameter("material vector must have 5 entries")
        return cls(*values)

    def to_dict(self) -> dict:
        return {n: float(getattr(self, n)) for n in PROPERTY_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialProperties":
        return cls(**{n: float(d[n]) for n in PROPERTY_NAMES})

    @classmethod
    def from_json(cls, path) -> "MaterialProperties":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Edge springs

def spring_forces(mesh: TriMesh, positions: np.ndarray, k_linear: float) -> np.ndarray:
    """Hookean forces along mesh edges; equal and opposite per edge.

    Edges whose current length collapses below 1e-12 m are skipped (their
    direction is undefined).
    """
    if mesh.n_edges == 0 or k_linear == 0.0:
        return np.zeros_like(positions)
    return spring_kernel(
        np.ascontiguousarray(positions), mesh.edges, mesh.rest_lengths,
        k_linear * K_LIN,
    )


def spring_energy(mesh: TriMesh, positions: np.ndarray, k_linear: float) -> float:
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    length = np.linalg.norm(positions[j] - positions[i], axis=1)
    return float(0.5 * k_linear * K_LIN * np.sum((length - mesh.rest_lengths) ** 2))


# ---------------------------------------------------------------------------
# Dihedral bending

def bending_forces(mesh: TriMesh, positions: np.ndarray, k_angular: float) -> np.ndarray:
    """Dihedral-spring restoring forces on the four vertices of each bending
    pair: the energy gradient of 1/2 * k * (theta - theta_rest)^2 per pair.
    Pairs with a degenerate face (area < 1e-12 m^2) are skipped.
    """
    if mesh.n_bending_pairs == 0 or k_angular == 0.0:
        return np.zeros_like(positions)
    return bending_kernel(
        np.ascontiguousarray(positions), mesh.bend_edge, mesh.bend_opposite,
        mesh.bend_rest_angle, k_angular * K_ANG,
    )


def bending_energy(mesh: TriMesh, positions: np.ndarray, k_angular: float) -> float:
    theta = dihedral_angles(positions, mesh.bend_edge, mesh.bend_opposite)
    return float(0.5 * k_angular * K_ANG * np.sum((theta - mesh.bend_rest_angle) ** 2))


# ---------------------------------------------------------------------------
# Volume preservation (closed meshes only)

def volume_forces(mesh: TriMesh, positions: np.ndarray, k_volume: float) -> np.ndarray:
    """Uniform-pressure forces restoring the enclosed rest volume.

    No-op when the mesh is open (rest_volume 0), so cloth-like objects are
    unaffected.  Each face pushes p * area * normal, split equally onto its
    three vertices.
    """
    if mesh.rest_volume <= 0.0 or k_volume == 0.0:
        return np.zeros_like(positions)
    return volume_kernel(
        np.ascontiguousarray(positions), mesh.faces, mesh.rest_volume,
        k_volume * K_VOL,
    )


def volume_energy(mesh: TriMesh, positions: np.ndarray, k_volume: float) -> float:
    if mesh.rest_volume <= 0.0:
        return 0.0
    current = enclosed_volume(positions, mesh.faces)
    return float(
        0.5 * k_volume * K_VOL * (mesh.rest_volume - current) ** 2 / mesh.rest_volume
    )


def total_forces(mesh: TriMesh, positions: np.ndarray,
                 material: MaterialProperties) -> np.ndarray:
    """All internal soft-body forces for the given material."""
    f = spring_forces(mesh, positions, material.linear_stiffness)
    f += bending_forces(mesh, positions, material.angular_stiffness)
    f += volume_forces(mesh, positions, material.volume_preservation)
    return f


# ---------------------------------------------------------------------------
# Semantic static masking

@dataclass(frozen=True)
class StaticMask:
    """8-bit grayscale mask in display space plus the camera that produced it.

    Pixel values >= STATIC_THRESHOLD mark static regions.
    """

    data: np.ndarray  # (height, width) uint8
    camera: Camera

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_file(cls, mask_path, camera: Camera) -> "StaticMask":
        """Load a PNG or PGM(P5) grayscale image."""
        from PIL import Image

        img = Image.open(mask_path).convert("L")
        return cls(data=np.asarray(img, dtype=np.uint8), camera=camera)

    @classmethod
    def from_bytes(cls, raw: bytes, camera: Camera) -> "StaticMask":
        import io

        from PIL import Image

        img = Image.open(io.BytesIO(raw)).convert("L")
        return cls(data=np.asarray(img, dtype=np.uint8), camera=camera)


def map_pixels_to_nodes(mesh: TriMesh, positions: np.ndarray,
                        mask: StaticMask) -> np.ndarray:
    """Per-node static flags: a node is static iff its projected pixel is a
    static mask pixel.  Nodes behind the camera are never static."""
    if mask.width == 0 or mask.height == 0:
        raise EmptyMask("mask has zero width or height")
    cam = Camera(view=mask.camera.view, fov_y_deg=mask.camera.fov_y_deg,
                 viewport=(mask.width, mask.height))
    pix, in_front = cam.pixel_indices(positions)
    flags = np.zeros(len(positions), dtype=bool)
    vis = np.nonzero(in_front)[0]
    flags[vis] = mask.data[pix[vis, 1], pix[vis, 0]] >= STATIC_THRESHOLD
    return flags


def apply_static_mask(dist: MassDistribution, flags: np.ndarray) -> MassDistribution:
    """Zero out the inverse mass of flagged nodes, making them immovable.

    Returns a new distribution; the input is untouched so callers can keep it
    around for undo.  Pinned nodes report node_mass = inf.
    """
    flags = np.asarray(flags, dtype=bool)
    if len(flags) != len(dist.node_mass):
        raise InvalidParameter("flag count does not match node count")
    if not flags.any():
        return dist
    node_mass = dist.node_mass.copy()
    inverse = dist.inverse_mass.copy()
    node_mass[flags] = np.inf
    inverse[flags] = 0.0
    return MassDistribution(
        node_mass=node_mass,
        inverse_mass=inverse,
        total_mass=dist.total_mass,
        center_of_mass=dist.center_of_mass,
        inertia_tensor=dist.inertia_tensor,
    )
