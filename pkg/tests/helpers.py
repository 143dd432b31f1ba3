"""Shared mesh builders and small utilities for the test suite."""

from __future__ import annotations

import numpy as np

from physid.mesh import TriMesh

CUBE_VERTICES = np.array([
    [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
])

# Outward (CCW from outside) triangulation of the unit cube.
CUBE_FACES = np.array([
    [4, 5, 6], [4, 6, 7],   # z = 1
    [1, 0, 3], [1, 3, 2],   # z = 0
    [0, 4, 7], [0, 7, 3],   # x = 0
    [5, 1, 2], [5, 2, 6],   # x = 1
    [0, 1, 5], [0, 5, 4],   # y = 0
    [3, 7, 6], [3, 6, 2],   # y = 1
])


def cube_obj_text(scale: float = 1.0, offset=(0.0, 0.0, 0.0)) -> str:
    lines = ["# unit cube"]
    for v in CUBE_VERTICES * scale + np.asarray(offset):
        lines.append("v %.17g %.17g %.17g" % tuple(v))
    for f in CUBE_FACES:
        lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    return "\n".join(lines) + "\n"


def make_cube_mesh(scale: float = 1.0, offset=(0.0, 0.0, 0.0)) -> TriMesh:
    return TriMesh.from_arrays(CUBE_VERTICES * scale + np.asarray(offset), CUBE_FACES)


def make_icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    """Icosahedron subdivided and projected onto the sphere.

    20 * 4**subdivisions faces; subdivisions=2 gives 320.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.add(verts[i], verts[j]) / 2.0
                m = m / np.linalg.norm(m)
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    vertices = np.array(verts) * radius
    return TriMesh.from_arrays(vertices, np.array(faces, dtype=np.int64))


def make_cloth_grid(nx: int, ny: int, spacing: float = 0.1,
                    origin=(0.0, 0.0, 0.0), plane: str = "xy") -> TriMesh:
    """Rectangular cloth grid of nx*ny vertices, quads split into triangles.

    plane "xy" builds a vertical sheet (y up); "xz" a horizontal one.
    """
    xs = np.arange(nx) * spacing
    ys = np.arange(ny) * spacing
    pts = []
    for j in range(ny):
        for i in range(nx):
            if plane == "xy":
                pts.append((xs[i], ys[j], 0.0))
            else:
                pts.append((xs[i], 0.0, ys[j]))
    pts = np.asarray(pts, dtype=np.float64) + np.asarray(origin)
    faces = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            a = j * nx + i
            b = a + 1
            c = a + nx
            d = c + 1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return TriMesh.from_arrays(pts, np.array(faces, dtype=np.int64))


def make_torus(n_major: int = 100, n_minor: int = 50, major_r: float = 0.5,
               minor_r: float = 0.2, center=(0.0, 1.0, 0.0)) -> TriMesh:
    """Closed torus grid (n_major * n_minor vertices), so volume forces are
    active; 100x50 gives the 5,000-node performance body."""
    us = 2.0 * np.pi * np.arange(n_major) / n_major
    vs = 2.0 * np.pi * np.arange(n_minor) / n_minor
    verts = np.empty((n_major * n_minor, 3))
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            r = major_r + minor_r * np.cos(v)
            verts[i * n_minor + j] = (
                r * np.cos(u), minor_r * np.sin(v), r * np.sin(u)
            )
    verts += np.asarray(center)
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = i * n_minor + (j + 1) % n_minor
            d = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            faces.append((a, b, d))
            faces.append((a, d, c))
    return TriMesh.from_arrays(verts, np.array(faces, dtype=np.int64))


def make_single_edge_mesh(p0, p1) -> TriMesh:
    """Minimal mesh exposing exactly one spring edge (no faces)."""
    vertices = np.array([p0, p1], dtype=np.float64)
    z2 = np.zeros((0, 2), dtype=np.int64)
    return TriMesh(
        vertices=vertices,
        faces=np.zeros((0, 3), dtype=np.int64),
        edges=np.array([[0, 1]], dtype=np.int64),
        rest_lengths=np.array([float(np.linalg.norm(vertices[1] - vertices[0]))]),
        bend_edge=z2,
        bend_opposite=z2.copy(),
        bend_faces=z2.copy(),
        bend_rest_angle=np.zeros(0),
        rest_volume=0.0,
    )


def make_bent_quad(angle: float = 0.0) -> TriMesh:
    """Two triangles sharing the edge (0,1); flap 3 rotated by ``angle`` out
    of the plane, with the flat configuration as rest."""
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.5, 1.0, 0.0],
        [0.5, -np.cos(angle), np.sin(angle)],
    ])
    faces = np.array([[0, 1, 2], [1, 0, 3]], dtype=np.int64)
    flat = verts.copy()
    flat[3] = [0.5, -1.0, 0.0]
    mesh = TriMesh.from_arrays(flat, faces)
    return mesh, verts


def random_rotation_matrix(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
