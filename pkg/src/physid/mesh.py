"""Triangle mesh ingestion and simulation topology.

Meshes are loaded from a Wavefront OBJ subset (``v`` and ``f`` records,
1-based indices, ``#`` comments; texture/normal sub-indices and every other
record type are ignored).  On load we derive everything the dynamics code
needs: unique edges with rest lengths, bending pairs (two faces sharing an
edge) with rest dihedral angles, and the enclosed rest volume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh, MalformedMesh


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangle mesh plus derived simulation topology.

    Attributes:
        vertices: (n, 3) float64 positions in meters.
        faces: (m, 3) int vertex indices, counter-clockwise winding.
        edges: (e, 2) int unique undirected edges, low index first.
        rest_lengths: (e,) edge lengths at load time.
        bend_edge: (p, 2) shared-edge endpoints per bending pair, ordered as
            traversed by the first face of the pair.
        bend_opposite: (p, 2) flap vertices (one per face of the pair).
        bend_faces: (p, 2) the two face indices of each pair.
        bend_rest_angle: (p,) rest dihedral angle in radians (0 = flat).
        rest_volume: enclosed volume in m^3; 0 for open surfaces.
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    rest_lengths: np.ndarray
    bend_edge: np.ndarray
    bend_opposite: np.ndarray
    bend_faces: np.ndarray
    bend_rest_angle: np.ndarray
    rest_volume: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_bending_pairs(self) -> int:
        return len(self.bend_edge)

    @classmethod
    def from_arrays(cls, vertices, faces) -> "TriMesh":
        """Build a mesh and all derived topology from raw vertex/face arrays."""
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if len(vertices) == 0:
            raise MalformedMesh("mesh has no vertices")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MalformedMesh(
                f"face index out of range (vertex count {len(vertices)})"
            )

        edges, rest_lengths = _derive_edges(vertices, faces)
        be, bo, bf = _derive_bending_pairs(faces)
        rest_angle = dihedral_angles(vertices, be, bo)
        volume = abs(derive_rest_volume_signed(vertices, faces))

        return cls(
            vertices=_readonly(vertices),
            faces=_readonly(faces),
            edges=_readonly(edges),
            rest_lengths=_readonly(rest_lengths),
            bend_edge=_readonly(be),
            bend_opposite=_readonly(bo),
            bend_faces=_readonly(bf),
            bend_rest_angle=_readonly(rest_angle),
            rest_volume=float(volume),
        )


def _derive_edges(vertices: np.ndarray, faces: np.ndarray):
    if len(faces) == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
    raw = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )
    raw.sort(axis=1)
    edges = np.unique(raw, axis=0)
    if np.any(edges[:, 0] == edges[:, 1]):
        raise MalformedMesh("face with a repeated vertex index")
    deltas = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    lengths = np.linalg.norm(deltas, axis=1)
    if np.any(lengths <= 0.0):
        raise MalformedMesh("edge with zero rest length (coincident vertices)")
    return edges, lengths


def _derive_bending_pairs(faces: np.ndarray):
    """Pair up faces sharing exactly one edge.

    Returns (shared_edge, opposite_vertices, face_pair) index arrays.  The
    shared edge is stored in the traversal order of the pair's first face so
    the dihedral sign convention is reproducible.
    """
    edge_to_faces: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_to_faces.setdefault(key, []).append(fi)

    be, bo, bf = [], [], []
    seen_pairs: set[tuple[int, int]] = set()
    for key, incident in edge_to_faces.items():
        if len(incident) < 2:
            continue
        for i in range(len(incident)):
            for j in range(i + 1, len(incident)):
                fa, fb = incident[i], incident[j]
                pair_key = (fa, fb)
                if pair_key in seen_pairs:
                    continue  # faces sharing two edges: keep a single pair
                seen_pairs.add(pair_key)
                ea, eb = _edge_in_face_order(faces[fa], key)
                oa = _opposite_vertex(faces[fa], key)
                ob = _opposite_vertex(faces[fb], key)
                be.append((ea, eb))
                bo.append((oa, ob))
                bf.append((fa, fb))
    if not be:
        z = np.zeros((0, 2), dtype=np.int64)
        return z, z.copy(), z.copy()
    return (
        np.array(be, dtype=np.int64),
        np.array(bo, dtype=np.int64),
        np.array(bf, dtype=np.int64),
    )


def _edge_in_face_order(face, key):
    a, b, c = int(face[0]), int(face[1]), int(face[2])
    for u, v in ((a, b), (b, c), (c, a)):
        if (min(u, v), max(u, v)) == key:
            return u, v
    raise MalformedMesh("bending pair edge not found in face")


def _opposite_vertex(face, key):
    for v in face:
        if int(v) not in key:
            return int(v)
    raise MalformedMesh("degenerate face in bending pair")


def dihedral_angles(positions: np.ndarray, bend_edge: np.ndarray,
                    bend_opposite: np.ndarray) -> np.ndarray:
    """Signed dihedral angle per bending pair; 0 when the faces are coplanar.

    Uses atan2 of the normals' cross/dot projected on the shared edge, which
    is stable near both flat and folded configurations.
    """
    if len(bend_edge) == 0:
        return np.zeros(0)
    x0 = positions[bend_edge[:, 0]]
    x1 = positions[bend_edge[:, 1]]
    xa = positions[bend_opposite[:, 0]]
    xb = positions[bend_opposite[:, 1]]
    e = x1 - x0
    n1 = np.cross(e, xa - x0)
    n2 = np.cross(xb - x0, e)
    e_norm = np.linalg.norm(e, axis=1)
    n1_norm = np.linalg.norm(n1, axis=1)
    n2_norm = np.linalg.norm(n2, axis=1)
    denom = n1_norm * n2_norm
    safe = np.maximum(denom, 1e-300)
    cos_t = np.einsum("ij,ij->i", n1, n2) / safe
    sin_t = np.einsum("ij,ij->i", np.cross(n1, n2), e) / (
        safe * np.maximum(e_norm, 1e-300)
    )
    return np.arctan2(sin_t, cos_t)


def derive_rest_volume_signed(vertices: np.ndarray, faces: np.ndarray) -> float:
    """Signed enclosed volume via the divergence theorem.

    Sum over faces of det(v0, v1, v2)/6.  Positive for consistently
    outward-wound closed meshes; ~0 for open surfaces.
    """
    if len(faces) == 0:
        return 0.0
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)


def derive_rest_volume(mesh: TriMesh) -> float:
    """Signed volume of the mesh's current vertex set (see TriMesh.rest_volume
    for the absolute value cached at load)."""
    return derive_rest_volume_signed(mesh.vertices, mesh.faces)


def enclosed_volume(positions: np.ndarray, faces: np.ndarray) -> float:
    """Signed volume for a deformed configuration of an existing mesh."""
    return derive_rest_volume_signed(positions, faces)


@dataclass(frozen=True)
class MassDistribution:
    """Per-node lumped masses plus aggregate quantities.

    ``inverse_mass`` of 0 encodes an immovable node; its ``node_mass`` entry
    is reported as inf in that case.
    """

    node_mass: np.ndarray
    inverse_mass: np.ndarray
    total_mass: float
    center_of_mass: np.ndarray
    inertia_tensor: np.ndarray

    def __post_init__(self):
        _readonly(np.asarray(self.node_mass))
        _readonly(np.asarray(self.inverse_mass))


def face_areas(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    d1 = positions[faces[:, 1]] - positions[faces[:, 0]]
    d2 = positions[faces[:, 2]] - positions[faces[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(d1, d2), axis=1)


def point_mass_inertia(positions: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Inertia tensor of point masses about their center of mass."""
    positions = np.asarray(positions, dtype=np.float64)
    masses = np.asarray(masses, dtype=np.float64)
    com = masses @ positions / masses.sum()
    r = positions - com
    r2 = np.einsum("ij,ij->i", r, r)
    eye_term = np.eye(3) * (masses @ r2)
    outer = np.einsum("i,ij,ik->jk", masses, r, r)
    inertia = eye_term - outer
    return (inertia + inertia.T) / 2.0  # exact symmetry despite fp rounding


def lump_mass(mesh: TriMesh, total_mass: float) -> MassDistribution:
    """Distribute ``total_mass`` onto vertices, one third of each incident
    face's area per vertex, normalized by the total surface area."""
    if total_mass <= 0:
        raise ValueError("total_mass must be positive")
    areas = face_areas(mesh.vertices, mesh.faces)
    total_area = float(areas.sum())
    if total_area <= 0.0:
        raise DegenerateMesh("mesh surface area is zero; cannot lump mass")

    share = np.zeros(mesh.n_vertices)
    third = areas / 3.0
    for col in range(3):
        share += np.bincount(
            mesh.faces[:, col], weights=third, minlength=mesh.n_vertices
        )
    node_mass = total_mass * share / total_area

    inverse = np.where(node_mass > 0.0, 1.0 / np.maximum(node_mass, 1e-300), 0.0)
    com = node_mass @ mesh.vertices / total_mass
    inertia = point_mass_inertia(mesh.vertices, node_mass)
    return MassDistribution(
        node_mass=node_mass,
        inverse_mass=inverse,
        total_mass=float(total_mass),
        center_of_mass=com,
        inertia_tensor=inertia,
    )


def load_obj(path) -> TriMesh:
    """Parse a Wavefront OBJ file into a TriMesh.

    Polygonal faces are fan-triangulated.  Raises FileNotFoundError for a
    missing file and MalformedMesh for syntax/topology violations.
    """
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MalformedMesh(f"line {lineno}: vertex needs 3 coords")
                try:
                    vertices.append([float(p) for p in parts[1:4]])
                except ValueError as exc:
                    raise MalformedMesh(f"line {lineno}: bad vertex: {exc}") from exc
            elif tag == "f":
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError as exc:
                        raise MalformedMesh(
                            f"line {lineno}: bad face index {token!r}"
                        ) from exc
                    # OBJ is 1-based; negatives count back from the end
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                if len(idx) < 3:
                    raise MalformedMesh(f"line {lineno}: face with <3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
            # every other record type is ignored
    if not vertices:
        raise MalformedMesh("OBJ contains no vertices")
    for tri in faces:
        for i in tri:
            if i < 0 or i >= len(vertices):
                raise MalformedMesh(f"face index {i + 1} out of range")
    return TriMesh.from_arrays(np.array(vertices), np.array(faces, dtype=np.int64))


def save_obj(mesh: TriMesh, path) -> None:
    """Write vertices/faces back out; %.17g round-trips float64 exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write("v %.17g %.17g %.17g\n" % (v[0], v[1], v[2]))
        for f in mesh.faces:
            fh.write("f %d %d %d\n" % (f[0] + 1, f[1] + 1, f[2] + 1))
