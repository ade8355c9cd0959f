"""Online position filtering for a target moving along a smooth curve.

The process model treats the target as momentarily circling the
instantaneous centre of curvature at constant speed.  The centre is not
observable from a single sample, so it is re-estimated every step from a
sliding window: consecutive displacement vectors of a smoothly turning
target are related by a fixed per-step rotation, whose cosine/sine pair
(the evolution matrix) is the least-squares solution of the stacked
displacement equations.  Given that rotation the centre follows from
elementary chord geometry.

Measurements are direct position observations, so the correction step is
a linear Kalman update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateMotionError,
    InvalidInputError,
    NumericalError,
    SingularityError,
    StraightLineError,
)

__all__ = [
    "EvolutionMatrix",
    "FilterConfig",
    "FilterInput",
    "FilterState",
    "Observation",
    "TrackedState",
    "estimate_evolution",
    "estimate_center",
    "predict_step",
    "correct_step",
    "track",
]

EPS_CENTER = 1e-6      # minimum state-to-centre distance (m)
EPS_DISPLACEMENT = 1e-9  # displacements below this count as no motion (m)


@dataclass(frozen=True)
class EvolutionMatrix:
    """Unit cosine/sine pair of the per-step rotation of the displacement vector."""

    c: float
    s: float

    def __post_init__(self):
        norm = math.hypot(self.c, self.s)
        if not np.isfinite(norm) or norm < 1e-300:
            raise InvalidInputError(f"evolution matrix must be finite and non-zero, got {self!r}")
        object.__setattr__(self, "c", self.c / norm)
        object.__setattr__(self, "s", self.s / norm)

    @property
    def delta(self) -> float:
        """Per-step rotation angle in radians."""
        return math.atan2(self.s, self.c)

    def rotation(self) -> np.ndarray:
        return np.array([[self.c, -self.s], [self.s, self.c]])


@dataclass(frozen=True)
class FilterInput:
    """Speed and instantaneous centre of curvature driving the process model."""

    va: float
    pe0: float
    pn0: float

    def __post_init__(self):
        if not (np.isfinite(self.va) and self.va > 0):
            raise InvalidInputError(f"speed must be finite and > 0, got {self.va!r}")
        if not (np.isfinite(self.pe0) and np.isfinite(self.pn0)):
            raise InvalidInputError("centre coordinates must be finite")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.pe0, self.pn0])


@dataclass(frozen=True)
class Observation:
    """A timestamped position measurement."""

    t: float
    pos: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.pos, dtype=float).reshape(2)
        if not (np.isfinite(self.t) and np.all(np.isfinite(pos))):
            raise InvalidInputError(f"observation must be finite, got {self!r}")
        object.__setattr__(self, "pos", pos)


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


@dataclass(frozen=True, eq=False)
class FilterState:
    """Filter mean and covariances: state x=(p_e, p_n), error covariance P,
    process noise Q, measurement noise R."""

    x: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(2)
        object.__setattr__(self, "x", x)
        for name in ("P", "Q", "R"):
            m = np.asarray(getattr(self, name), dtype=float).reshape(2, 2)
            if not np.all(np.isfinite(m)):
                raise InvalidInputError(f"{name} must be finite")
            object.__setattr__(self, name, _symmetrize(m))


@dataclass(frozen=True)
class FilterConfig:
    """Tunable filter parameters (all file/CLI-settable).

    ``max_stride`` caps the adaptive decimation of the curvature window:
    when per-sample displacements are small against the measurement noise,
    the window is built from every k-th filtered state so the chords carry
    usable curvature signal.
    """

    window_len: int = 10
    q_std: float = 0.05          # process noise std per sqrt(second), per axis
    r_std: float = 0.1           # measurement noise std, per axis
    eps_delta: float = 1e-4      # curvature angles below this count as straight motion
    max_substep_dt: float = 0.05  # Euler integration substep ceiling (s)
    max_stride: int = 16

    def __post_init__(self):
        if self.window_len < 4:
            raise InvalidInputError("window_len must be >= 4")
        if self.max_stride < 1:
            raise InvalidInputError("max_stride must be >= 1")
        for name in ("q_std", "r_std", "eps_delta", "max_substep_dt"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidInputError(f"FilterConfig.{name} must be finite and > 0")


@dataclass(frozen=True)
class TrackedState:
    """One filtered output sample; ``mode`` records how the prediction was made."""

    t: float
    pos: np.ndarray
    cov: np.ndarray
    mode: str  # "init" | "ekf" | "fallback"


def estimate_evolution(window) -> EvolutionMatrix:
    """Least-squares estimate of the per-step displacement rotation.

    Stacks the linear system relating consecutive displacement pairs of
    the window (two scalar equations per pair) and solves for the
    cosine/sine of the step rotation, normalised to unit length.
    """
    pts = np.asarray(window, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
        raise InvalidInputError(f"window must hold >= 4 points with shape (n, 2), got {pts.shape}")
    disp = np.diff(pts, axis=0)
    if np.max(np.linalg.norm(disp, axis=1)) < EPS_DISPLACEMENT:
        raise DegenerateMotionError("all displacements are ~0; target appears stationary")
    prev, nxt = disp[:-1], disp[1:]
    # rows: [dx_prev, -dy_prev; dy_prev, dx_prev] @ [c, s]^T = [dx_next, dy_next]^T
    a = np.empty((2 * len(prev), 2))
    a[0::2, 0] = prev[:, 0]
    a[0::2, 1] = -prev[:, 1]
    a[1::2, 0] = prev[:, 1]
    a[1::2, 1] = prev[:, 0]
    rhs = nxt.reshape(-1)
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    if not np.all(np.isfinite(sol)) or math.hypot(*sol) < 1e-300:
        raise DegenerateMotionError("displacement system is degenerate")
    return EvolutionMatrix(float(sol[0]), float(sol[1]))


def estimate_center(window, ev: EvolutionMatrix, eps_delta: float = 1e-4) -> tuple[float, float]:
    """Centre of the instantaneous circle through the window's latest points.

    The next displacement is predicted by rotating the last observed one
    through the evolution matrix; the centre then sits on that chord's
    perpendicular bisector at signed distance ``|chord| / (2 tan(delta/2))``,
    which reduces to dividing the rotated displacement by ``delta`` in the
    small-angle limit.  Exact for points sampled from a true circle.
    """
    pts = np.asarray(window, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise InvalidInputError(f"window must hold >= 2 points with shape (n, 2), got {pts.shape}")
    delta = ev.delta
    if abs(delta) < eps_delta:
        raise StraightLineError(f"step rotation {delta:.2e} rad is below {eps_delta:.2e}; motion is straight")
    d_next = ev.rotation() @ (pts[-1] - pts[-2])
    mid = pts[-1] + 0.5 * d_next
    perp = np.array([-d_next[1], d_next[0]])
    center = mid + perp / (2.0 * math.tan(0.5 * delta))
    return float(center[0]), float(center[1])


def _process_rate(x: np.ndarray, u: FilterInput) -> np.ndarray:
    """State derivative: speed ``va`` tangent to the circle about the centre."""
    q = x - u.center
    rho = float(np.linalg.norm(q))
    if rho < EPS_CENTER:
        raise SingularityError(f"state within {rho:.2e} m of the centre of curvature")
    return u.va / rho * np.array([-q[1], q[0]])


def _process_jacobian(x: np.ndarray, u: FilterInput) -> np.ndarray:
    qe, qn = x - u.center
    rho2 = qe * qe + qn * qn
    rho = math.sqrt(rho2)
    if rho < EPS_CENTER:
        raise SingularityError(f"state within {rho:.2e} m of the centre of curvature")
    return u.va / (rho2 * rho) * np.array([[qn * qe, -qe * qe], [qn * qn, -qe * qn]])


def predict_step(fs: FilterState, u: FilterInput, dt: float, max_substep_dt: float = 0.05) -> FilterState:
    """Propagate mean and covariance over ``dt`` with Euler substeps.

    The covariance follows the linearised continuous-time update
    ``P += (A P + P A^T + Q) h`` with the Jacobian evaluated at the
    current substep state.
    """
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidInputError(f"dt must be finite and > 0, got {dt!r}")
    n_sub = max(1, int(math.ceil(dt / max_substep_dt)))
    h = dt / n_sub
    x = fs.x.copy()
    p = fs.P.copy()
    for _ in range(n_sub):
        a = _process_jacobian(x, u)
        x = x + _process_rate(x, u) * h
        p = p + (a @ p + p @ a.T + fs.Q) * h
    return FilterState(x=x, P=p, Q=fs.Q, R=fs.R)


def correct_step(fs: FilterState, z: Observation) -> FilterState:
    """Kalman correction with an identity measurement model."""
    s = fs.R + fs.P
    try:
        gain = np.linalg.solve(s.T, fs.P.T).T  # P @ inv(R + P)
    except np.linalg.LinAlgError:
        raise NumericalError("R + P is not invertible in the correction step") from None
    if not np.all(np.isfinite(gain)):
        raise NumericalError("Kalman gain is non-finite")
    x = fs.x + gain @ (z.pos - fs.x)
    p = (np.eye(2) - gain) @ fs.P
    return FilterState(x=x, P=p, Q=fs.Q, R=fs.R)


def track(stream, cfg: FilterConfig | None = None) -> list[TrackedState]:
    """Filter an observation stream and return one state per observation.

    Until the sliding window fills, samples are passed through the pure
    correction step (``mode="init"``).  After warm-up each step estimates
    the evolution matrix and centre of curvature from the most recent
    filtered positions, propagates the state to the new timestamp and
    corrects with the measurement (``mode="ekf"``).  Windows with no
    measurable curvature fall back to straight-line propagation along the
    last displacement for that step (``mode="fallback"``).
    """
    cfg = cfg or FilterConfig()
    obs = list(stream)
    if len(obs) < cfg.window_len:
        raise InvalidInputError(f"need at least window_len={cfg.window_len} observations, got {len(obs)}")
    times = np.array([o.t for o in obs])
    if np.any(np.diff(times) <= 0):
        raise InvalidInputError("observation timestamps must be strictly increasing")

    q = cfg.q_std**2 * np.eye(2)
    r = cfg.r_std**2 * np.eye(2)
    fs = FilterState(x=obs[0].pos, P=r, Q=q, R=r)
    out = [TrackedState(obs[0].t, fs.x.copy(), fs.P.copy(), "init")]
    win_pos: list[np.ndarray] = [fs.x.copy()]
    win_t: list[float] = [obs[0].t]

    va_prev: float | None = None
    for o in obs[1:]:
        dt = o.t - win_t[-1]
        mode = "init"
        if len(win_pos) >= cfg.window_len:
            hist = np.asarray(win_pos)
            ht = np.asarray(win_t)
            # stride so that one window chord is ~8x the measurement noise;
            # the previous step's speed estimate avoids the noise-inflated
            # chord length of the raw stride-1 window
            want = 1
            if va_prev is not None and va_prev > 0:
                want = int(min(cfg.max_stride, max(1, math.ceil(8.0 * cfg.r_std / (va_prev * dt)))))
            avail = (len(hist) - 1) // (cfg.window_len - 1)
            stride = max(1, min(want, avail))
            idx = np.arange(len(hist) - 1 - stride * (cfg.window_len - 1), len(hist), stride)
            window = hist[idx]
            wt = ht[idx]
            speeds = np.linalg.norm(np.diff(window, axis=0), axis=1) / np.diff(wt)
            va = float(np.mean(speeds))
            va_prev = va
            try:
                if va <= 0:
                    raise DegenerateMotionError("windowed speed estimate is zero")
                if avail < want:
                    raise DegenerateMotionError("history too short for the designed window stride")
                ev = estimate_evolution(window)
                pe0, pn0 = estimate_center(window, ev, cfg.eps_delta)
                rho = float(np.hypot(fs.x[0] - pe0, fs.x[1] - pn0))
                if rho < max(EPS_CENTER, 2.0 * va * dt):
                    # a centre within two steps of the state means the window's
                    # curvature estimate is noise, not geometry
                    raise SingularityError(f"implausible centre of curvature at {rho:.2e} m")
                fs = predict_step(fs, FilterInput(va, pe0, pn0), dt, cfg.max_substep_dt)
                mode = "ekf"
            except (DegenerateMotionError, SingularityError):
                # straight-line fallback: drift along the last unit displacement
                last = window[-1] - window[-2]
                norm = float(np.linalg.norm(last))
                x = fs.x + (va * dt / norm) * last if norm > EPS_DISPLACEMENT else fs.x
                fs = FilterState(x=x, P=fs.P + fs.Q * dt, Q=fs.Q, R=fs.R)
                mode = "fallback"
        else:
            # window not full yet: let uncertainty grow with time so the gain
            # does not collapse while there is no motion model
            fs = FilterState(x=fs.x, P=fs.P + fs.Q * dt, Q=fs.Q, R=fs.R)
        fs = correct_step(fs, o)
        out.append(TrackedState(o.t, fs.x.copy(), fs.P.copy(), mode))
        win_pos.append(fs.x.copy())
        win_t.append(o.t)

    return out
