"""Best-fit plane for a 3D loop and the rigid 3D <-> 2D transform it induces.

The plane is found by SVD of the centred point matrix: the right singular
vector with the smallest singular value is the plane normal, and the
smallest singular value itself measures how far the points deviate from a
perfect plane.  Alignment then proceeds in two elementary rotations: about
Z so the plane's horizontal trace becomes parallel to the x-axis, then
about X so the plane folds down onto X-Y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DegenerateGeometryError, InvalidInputError

__all__ = ["PlaneFrame", "fit_plane", "align_to_xy", "lift_to_3d", "frame_from_plane"]

# Relative sigma ratio below which the centred points count as collinear.
_RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PlaneFrame:
    """Centroid, unit normal and the two rotation angles aligning a plane to X-Y.

    ``gamma`` is the Z-rotation angle, ``alpha`` the follow-up X-rotation
    angle; ``sigma`` holds the three singular values of the centred point
    matrix (descending), so ``sigma[2]`` is the planarity score.
    """

    normal: np.ndarray
    centroid: np.ndarray
    gamma: float
    alpha: float
    sigma: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        c = np.asarray(self.centroid, dtype=float).reshape(3)
        s = np.asarray(self.sigma, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise InvalidInputError(f"normal must be unit length, got {n}")
        if not (s[0] >= s[1] >= s[2] >= -1e-12):
            raise InvalidInputError(f"singular values must be descending and >= 0, got {s}")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "centroid", c)
        object.__setattr__(self, "sigma", np.maximum(s, 0.0))

    def rotation(self) -> np.ndarray:
        """3x3 matrix taking centred world points into the plane frame (normal -> +z)."""
        cg, sg = math.cos(self.gamma), math.sin(self.gamma)
        ca, sa = math.cos(self.alpha), math.sin(self.alpha)
        rz = np.array([[cg, sg, 0.0], [-sg, cg, 0.0], [0.0, 0.0, 1.0]])  # rotation by -gamma
        rx = np.array([[1.0, 0.0, 0.0], [0.0, ca, sa], [0.0, -sa, ca]])  # rotation by -alpha
        return rx @ rz

    def to_dict(self) -> dict:
        return {
            "normal": self.normal.tolist(),
            "centroid": self.centroid.tolist(),
            "gamma": self.gamma,
            "alpha": self.alpha,
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlaneFrame":
        return cls(
            np.asarray(d["normal"], dtype=float),
            np.asarray(d["centroid"], dtype=float),
            float(d["gamma"]),
            float(d["alpha"]),
            np.asarray(d["sigma"], dtype=float),
        )


def _angles_from_normal(n: np.ndarray) -> tuple[float, float]:
    """Z- and X-rotation angles that carry unit normal ``n`` (n3 >= 0) onto +z."""
    h = math.hypot(n[0], n[1])
    if h < 1e-15:
        return 0.0, 0.0  # already horizontal; identity is the continuous limit
    gamma = math.atan2(n[0], -n[1])
    alpha = math.acos(min(1.0, abs(n[2])))
    return gamma, alpha


def _canonical_normal(v: np.ndarray) -> np.ndarray:
    """Fix the normal's sign: n3 >= 0, ties broken toward positive n1 then n2."""
    if v[2] < 0.0:
        return -v
    if v[2] == 0.0 and (v[0] < 0.0 or (v[0] == 0.0 and v[1] < 0.0)):
        return -v
    return v


def fit_plane(points) -> PlaneFrame:
    """Fit the least-squares plane through >= 3 non-collinear 3D points.

    Returns the frame holding the centroid, the unit normal (smallest
    right singular vector of the centred points, sign fixed so n3 >= 0)
    and the rotation angles that align the plane with X-Y.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidInputError(f"points must have shape (n, 3), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points contain non-finite coordinates")
    if len(pts) < 3:
        raise DegenerateGeometryError(f"plane fit needs >= 3 points, got {len(pts)}")

    centroid = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    if s[1] <= _RANK_TOL * max(s[0], 1e-300) or s[0] == 0.0:
        raise DegenerateGeometryError("points are collinear or coincident; plane is undetermined")

    normal = _canonical_normal(vt[2])
    gamma, alpha = _angles_from_normal(normal)
    return PlaneFrame(normal=normal, centroid=centroid, gamma=gamma, alpha=alpha, sigma=s)


def frame_from_plane(normal, point) -> PlaneFrame:
    """Build a frame for a known plane (unit-normalised ``normal`` through ``point``).

    Useful for synthesising trajectories; the singular values are zero
    because no point set was fitted.
    """
    n = np.asarray(normal, dtype=float).reshape(3)
    norm = np.linalg.norm(n)
    if not np.all(np.isfinite(n)) or norm < 1e-15:
        raise InvalidInputError(f"normal must be finite and non-zero, got {normal!r}")
    n = _canonical_normal(n / norm)
    gamma, alpha = _angles_from_normal(n)
    return PlaneFrame(normal=n, centroid=np.asarray(point, dtype=float).reshape(3),
                      gamma=gamma, alpha=alpha, sigma=np.zeros(3))


def align_to_xy(points, frame: PlaneFrame) -> np.ndarray:
    """Rigidly carry 3D points into the frame's plane and drop the z column.

    Points are centred on the frame centroid, rotated about Z by
    ``-gamma`` and about X by ``-alpha``.  Raises
    :class:`~looptrack.errors.AlignmentError` when the residual
    z-coordinates are inconsistent with the frame's planarity score.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidInputError(f"points must have shape (n, 3), got {pts.shape}")
    flat = (pts - frame.centroid) @ frame.rotation().T
    max_z = float(np.max(np.abs(flat[:, 2]))) if len(flat) else 0.0
    if max_z > 10.0 * frame.sigma[2] + 1e-6:
        raise AlignmentError(
            f"points stick out of the plane by {max_z:.3g}, inconsistent with planarity score {frame.sigma[2]:.3g}"
        )
    return flat[:, :2]


def lift_to_3d(points, frame: PlaneFrame) -> np.ndarray:
    """Inverse of :func:`align_to_xy`: embed 2D plane points back into 3D."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"points must have shape (n, 2), got {pts.shape}")
    flat = np.column_stack([pts, np.zeros(len(pts))])
    return flat @ frame.rotation() + frame.centroid
