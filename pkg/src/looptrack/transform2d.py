"""Posing canonical curves in the plane: rotation + offset residuals.

A posed curve is the canonical curve rotated counter-clockwise by ``theta``
and shifted by ``(x0, y0)``.  Its residual at a world point is the canonical
implicit value after undoing the pose (translate by the negative offset,
rotate by ``-theta``).  The same convention is used for fitting and for
rendering fitted curves, so residual == 0 iff the point lies on the posed
curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import curves
from .curves import CanonicalParams, CurveFamily
from .errors import InvalidInputError

__all__ = [
    "Pose2",
    "CurveModel",
    "wrap_angle",
    "wrap_to_sector",
    "sector_distance",
    "rotate_points",
    "canonical_to_world",
    "world_to_canonical",
    "model_residual",
    "residual_vector",
    "sample_model",
]


def wrap_angle(theta: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return float((theta + math.pi) % (2.0 * math.pi) - math.pi)


def wrap_to_sector(theta: float, sector: float) -> float:
    """Wrap an angle to [0, sector)."""
    return float(theta % sector)


def sector_distance(t1: float, t2: float, sector: float) -> float:
    """Smallest angular distance between two orientations modulo a symmetry sector."""
    d = (t1 - t2) % sector
    return float(min(d, sector - d))


@dataclass(frozen=True)
class Pose2:
    """In-plane pose of a curve: rotation ``theta`` and offset ``(x0, y0)``."""

    theta: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.x0) and np.isfinite(self.y0)):
            raise InvalidInputError(f"pose must be finite, got {self!r}")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def offset(self) -> np.ndarray:
        return np.array([self.x0, self.y0])


@dataclass(frozen=True)
class CurveModel:
    """A classified-and-posed closed curve: family, size parameters and pose."""

    family: CurveFamily
    params: CanonicalParams
    pose: Pose2

    def __post_init__(self):
        curves.validate_params(self.family, self.params)

    def to_dict(self) -> dict:
        d = {
            "family": self.family.label,
            "a": self.params.a,
            "theta": self.pose.theta,
            "x0": self.pose.x0,
            "y0": self.pose.y0,
        }
        if self.params.b is not None:
            d["b"] = self.params.b
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CurveModel":
        family = CurveFamily.from_label(d["family"])
        params = CanonicalParams(float(d["a"]), float(d["b"]) if "b" in d and d["b"] is not None else None)
        pose = Pose2(float(d.get("theta", 0.0)), float(d.get("x0", 0.0)), float(d.get("y0", 0.0)))
        return cls(family, params, pose)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate_points(points, theta: float) -> np.ndarray:
    """Rotate an (n, 2) point set counter-clockwise by ``theta`` about the origin."""
    if not np.isfinite(theta):
        raise InvalidInputError(f"theta must be finite, got {theta!r}")
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = pts @ _rotation(theta).T
    return out[0] if single else out


def canonical_to_world(model: CurveModel, points) -> np.ndarray:
    """Map canonical-frame points onto the posed curve (rotate then translate)."""
    return rotate_points(points, model.pose.theta) + model.pose.offset


def world_to_canonical(model: CurveModel, points) -> np.ndarray:
    """Undo the pose: translate by the negative offset, then rotate by -theta."""
    pts = np.asarray(points, dtype=float)
    return rotate_points(pts - model.pose.offset, -model.pose.theta)


def model_residual(model: CurveModel, p) -> float:
    """Implicit residual of the posed curve at a world point (0 iff on the curve)."""
    p = np.asarray(p, dtype=float)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise InvalidInputError(f"point must be a finite 2-vector, got {p!r}")
    q = world_to_canonical(model, p)
    return curves.implicit_value(model.family, model.params, q)


def residual_vector(model: CurveModel, points) -> np.ndarray:
    """Residuals of the posed curve at each of the given points.

    The sum of squares of this vector is the quantity the curve fitter
    minimises.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise InvalidInputError("points must be non-empty")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"points must have shape (n, 2), got {pts.shape}")
    q = world_to_canonical(model, pts)
    return curves.implicit_values(model.family, model.params, q)


def sample_model(model: CurveModel, n: int) -> np.ndarray:
    """Sample ``n`` points along the posed curve (canonical sampler + pose)."""
    return canonical_to_world(model, curves.sample_parametric(model.family, model.params, n))
