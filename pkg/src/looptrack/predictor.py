"""Short-horizon prediction by propagating the displacement rotation.

Observation phase: gather a window of (filtered) states, estimate the
per-step rotation of the displacement vector by least squares.
Prediction phase: starting from the newest displacement, apply that
rotation repeatedly and accumulate the rotated displacements onto the
anchor state.  Constant speed and slowly varying curvature are assumed,
so every predicted displacement has the same length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ekf import EvolutionMatrix, estimate_evolution
from .errors import InvalidInputError

__all__ = ["PredictionHorizon", "observe_phase", "predict_horizon"]


@dataclass(frozen=True, eq=False)
class PredictionHorizon:
    """``m`` future waypoints spaced ``dt`` apart after the anchor state."""

    m: int
    dt: float
    anchor_t: float
    anchor: np.ndarray          # (2,)
    times: np.ndarray           # (m,), anchor_t + dt ... anchor_t + m*dt
    points: np.ndarray          # (m, 2)

    def to_rows(self) -> list[tuple[float, float, float]]:
        """(t, x, y) rows, CSV-ready."""
        return [(float(t), float(p[0]), float(p[1])) for t, p in zip(self.times, self.points)]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "dt": self.dt,
            "anchor_t": self.anchor_t,
            "anchor": self.anchor.tolist(),
            "waypoints": [[float(t), float(p[0]), float(p[1])] for t, p in zip(self.times, self.points)],
        }


def observe_phase(states) -> tuple[EvolutionMatrix, np.ndarray, float]:
    """Estimate the displacement rotation from a window of timestamped states.

    ``states`` is a sequence of (t, (x, y)) pairs with strictly increasing
    times.  Returns the unit evolution matrix, the last displacement
    vector and the mean speed over the window.
    """
    try:
        times = np.array([float(t) for t, _ in states])
        pos = np.array([np.asarray(p, dtype=float).reshape(2) for _, p in states])
    except (TypeError, ValueError):
        raise InvalidInputError("states must be (t, (x, y)) pairs") from None
    if len(pos) < 4:
        raise InvalidInputError(f"need >= 4 states, got {len(pos)}")
    dts = np.diff(times)
    if np.any(dts <= 0):
        raise InvalidInputError("state timestamps must be strictly increasing")
    ev = estimate_evolution(pos)  # raises DegenerateMotionError when stationary
    disp = np.diff(pos, axis=0)
    speed = float(np.mean(np.linalg.norm(disp, axis=1) / dts))
    return ev, disp[-1], speed


def predict_horizon(anchor: tuple[float, np.ndarray], ev: EvolutionMatrix,
                    last_disp, m: int, dt: float) -> PredictionHorizon:
    """Propagate the rotation ``m`` steps ahead of the anchor state.

    Waypoint j is the anchor plus the sum of the first j rotated
    displacements; all displacements share the length of ``last_disp``.
    """
    if m < 1:
        raise InvalidInputError(f"horizon must be >= 1 steps, got {m}")
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidInputError(f"dt must be finite and > 0, got {dt!r}")
    t0, p0 = anchor
    p0 = np.asarray(p0, dtype=float).reshape(2)
    d = np.asarray(last_disp, dtype=float).reshape(2)
    if float(np.linalg.norm(d)) <= 0.0:
        raise InvalidInputError("last displacement must be non-zero")

    rot = ev.rotation()
    points = np.empty((m, 2))
    acc = p0.copy()
    for j in range(m):
        d = rot @ d
        acc = acc + d
        points[j] = acc
    times = float(t0) + dt * np.arange(1, m + 1)
    return PredictionHorizon(m=m, dt=float(dt), anchor_t=float(t0), anchor=p0,
                             times=times, points=points)
