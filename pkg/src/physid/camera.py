"""Pinhole camera: world <-> pixel mapping shared by mask ingestion, touch
input, and the browser viewer.

Conventions (must match the frontend renderer exactly):
  * view matrix maps world to camera space, row-major 4x4;
  * camera space is right-handed, looking down -Z with +Y up;
  * pixel (0, 0) is the top-left of the viewport, x right, y down;
  * a node "projects to pixel (i, j)" when its continuous image coordinate
    falls inside that pixel's footprint (floor sampling, clamped).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Camera:
    view: np.ndarray            # (4, 4) world -> camera
    fov_y_deg: float
    viewport: tuple[int, int]   # (width, height) pixels

    def __post_init__(self):
        v = np.asarray(self.view, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "view", v)
        v.flags.writeable = False

    @property
    def width(self) -> int:
        return int(self.viewport[0])

    @property
    def height(self) -> int:
        return int(self.viewport[1])

    @property
    def _tan_half_fov(self) -> float:
        return math.tan(math.radians(self.fov_y_deg) / 2.0)

    @property
    def aspect(self) -> float:
        return self.width / self.height

    def world_to_view(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return points @ self.view[:3, :3].T + self.view[:3, 3]

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project world points to continuous pixel coordinates.

        Returns (pixels (n, 2), in_front (n,) bool).  Points at or behind the
        camera plane get in_front=False and untrustworthy pixel values.
        """
        pv = self.world_to_view(points)
        z = pv[:, 2]
        in_front = z < 0.0
        denom = np.where(in_front, -z, 1.0)
        t = self._tan_half_fov
        x_ndc = pv[:, 0] / (denom * t * self.aspect)
        y_ndc = pv[:, 1] / (denom * t)
        px = (x_ndc + 1.0) * 0.5 * self.width
        py = (1.0 - y_ndc) * 0.5 * self.height
        return np.stack([px, py], axis=1), in_front

    def pixel_indices(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest-pixel (floor) sampling of projected points, clamped to the
        viewport."""
        pix, in_front = self.project(points)
        ix = np.clip(np.floor(pix[:, 0]).astype(np.int64), 0, self.width - 1)
        iy = np.clip(np.floor(pix[:, 1]).astype(np.int64), 0, self.height - 1)
        return np.stack([ix, iy], axis=1), in_front

    @property
    def _inverse_rotation(self) -> np.ndarray:
        return self.view[:3, :3].T

    @property
    def position(self) -> np.ndarray:
        """Camera origin in world space."""
        return -(self._inverse_rotation @ self.view[:3, 3])

    @property
    def right_world(self) -> np.ndarray:
        return self.view[0, :3].copy()

    @property
    def up_world(self) -> np.ndarray:
        return self.view[1, :3].copy()

    def pixel_ray(self, px: float, py: float) -> tuple[np.ndarray, np.ndarray]:
        """Ray through a (continuous) pixel coordinate: (origin, unit dir)."""
        t = self._tan_half_fov
        x_ndc = 2.0 * px / self.width - 1.0
        y_ndc = 1.0 - 2.0 * py / self.height
        d_cam = np.array([x_ndc * t * self.aspect, y_ndc * t, -1.0])
        d_world = self._inverse_rotation @ d_cam
        return self.position, d_world / np.linalg.norm(d_world)

    def screen_motion_to_world(self, dx: float, dy: float) -> np.ndarray | None:
        """Map an on-screen drag (pixels, y down) to a world direction in the
        camera's image plane; None for zero motion."""
        v = dx * self.right_world - dy * self.up_world
        n = np.linalg.norm(v)
        if n == 0.0:
            return None
        return v / n

    def to_dict(self) -> dict:
        return {
            "view": [float(x) for x in self.view.reshape(-1)],
            "fov_y_deg": float(self.fov_y_deg),
            "viewport": [self.width, self.height],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        view = np.asarray(d["view"], dtype=np.float64).reshape(4, 4)
        w, h = d["viewport"]
        return cls(view=view, fov_y_deg=float(d["fov_y_deg"]), viewport=(int(w), int(h)))

    @classmethod
    def from_json(cls, path) -> "Camera":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 1.0, 0.0), fov_y_deg=45.0,
                viewport=(512, 512)) -> "Camera":
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        up = np.asarray(up, dtype=np.float64)
        fwd = target - eye
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, up)
        right = right / np.linalg.norm(right)
        true_up = np.cross(right, fwd)
        view = np.eye(4)
        view[0, :3] = right
        view[1, :3] = true_up
        view[2, :3] = -fwd
        view[:3, 3] = -(view[:3, :3] @ eye)
        return cls(view=view, fov_y_deg=fov_y_deg, viewport=tuple(viewport))


# Camera both sides of the wire assume when a session does not supply one.
DEFAULT_CAMERA = Camera.look_at(
    eye=(0.0, 0.5, 2.5), target=(0.0, 0.0, 0.0), fov_y_deg=45.0, viewport=(512, 512)
)
