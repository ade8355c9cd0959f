"""Levenberg-Marquardt fitting of posed curve models to 2D point loops.

The objective is the sum of squared implicit residuals over the points,
with every residual divided by a fixed data-scale constant (the RMS
radius of the centred points, raised to the family's polynomial degree)
so values are dimensionless and comparable across loop sizes.  The
divisor is deliberately a constant of the data, not of the parameters:
dividing by a parameter-dependent power rewards inflating the size
parameters and creates spurious minima.  Sizes are optimised in log
space (which keeps them positive), the orientation is wrapped into the
family's symmetry sector on output, and a handful of orientation
restarts guard against the local minima of multi-lobed families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import curves, transform2d
from .curves import CanonicalParams, CurveFamily
from .errors import DegenerateGeometryError, InvalidInputError
from .transform2d import CurveModel, Pose2

__all__ = ["FitOptions", "FitResult", "initial_guess", "lm_fit", "grid_oracle",
           "normalized_e2", "sampson_distances"]


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-10
    step_tolerance: float = 1e-10
    lambda0: float = 1e-3            # initial damping
    lambda_up: float = 10.0          # multiplier on rejected steps
    lambda_down: float = 10.0        # divisor on accepted steps
    lambda_max: float = 1e10
    fd_step: float = 1e-6            # relative central-difference step
    max_step: float = 100.0          # reject parameter steps larger than this
    multistart_phases: int = 5       # orientation restarts across the symmetry sector
    multistart_e2_per_point: float = 1e-9

    def __post_init__(self):
        for name in ("max_iterations", "gradient_tolerance", "step_tolerance", "lambda0",
                     "lambda_up", "lambda_down", "lambda_max", "fd_step", "multistart_phases"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"FitOptions.{name} must be positive")


@dataclass
class FitResult:
    model: CurveModel
    e2: float                        # raw sum of squared implicit residuals
    e2_normalized: float             # sum of squares of the scale-normalised residuals
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list)  # normalised e2 at accepted steps

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "e2": self.e2,
            "e2_normalized": self.e2_normalized,
            "iterations": self.iterations,
            "converged": self.converged,
            "trace": list(self.trace),
        }


def _model_from_beta(family: CurveFamily, beta: np.ndarray) -> CurveModel:
    two = curves.arity(family) == 2
    a = math.exp(beta[0])
    b = math.exp(beta[1]) if two else None
    theta, x0, y0 = beta[-3], beta[-2], beta[-1]
    return CurveModel(family, CanonicalParams(a, b), Pose2(theta, x0, y0))


def _beta_from_model(model: CurveModel) -> np.ndarray:
    beta = [math.log(model.params.a)]
    if model.params.b is not None:
        beta.append(math.log(model.params.b))
    beta += [model.pose.theta, model.pose.x0, model.pose.y0]
    return np.array(beta)


def _data_scale(points: np.ndarray) -> float:
    """RMS radius of the centred points; the fixed length unit of one fit."""
    centred = points - points.mean(axis=0)
    return max(float(np.sqrt(np.mean(np.sum(centred**2, axis=1)))), 1e-12)


def _normalized_residuals(family: CurveFamily, beta: np.ndarray, points: np.ndarray,
                          scale: float | None = None) -> np.ndarray:
    model = _model_from_beta(family, beta)
    s = (scale if scale is not None else _data_scale(points)) ** curves.degree(family)
    return transform2d.residual_vector(model, points) / s


def normalized_e2(model: CurveModel, points) -> float:
    """Scale-normalised sum of squared residuals (the quantity LM minimises)."""
    pts = np.asarray(points, dtype=float)
    r = _normalized_residuals(model.family, _beta_from_model(model), pts)
    return float(r @ r)


def _fd_jacobian(fun, beta: np.ndarray, rel_step: float) -> np.ndarray:
    """Central-difference Jacobian of a vector function of beta."""
    r0 = fun(beta)
    jac = np.empty((r0.size, beta.size))
    for j in range(beta.size):
        h = rel_step * max(1.0, abs(beta[j]))
        plus, minus = beta.copy(), beta.copy()
        plus[j] += h
        minus[j] -= h
        jac[:, j] = (fun(plus) - fun(minus)) / (2.0 * h)
    return jac


def initial_guess(family: CurveFamily, points) -> CurveModel:
    """Cheap closed-form starting model: centroid offset, RMS-radius size,
    principal-axis orientation."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
        raise InvalidInputError(f"need >= 8 points with shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points contain non-finite coordinates")
    centroid = pts.mean(axis=0)
    centred = pts - centroid
    rms = float(np.sqrt(np.mean(np.sum(centred**2, axis=1))))
    if rms < 1e-12:
        raise DegenerateGeometryError("all points coincide; no curve to fit")
    second = centred.T @ centred / len(pts)
    evals, evecs = np.linalg.eigh(second)
    major = evecs[:, int(np.argmax(evals))]
    theta = transform2d.wrap_to_sector(math.atan2(major[1], major[0]), curves.symmetry_sector(family))
    b = rms if curves.arity(family) == 2 else None
    return CurveModel(family, CanonicalParams(rms, b), Pose2(theta, centroid[0], centroid[1]))


def _lm_core(family: CurveFamily, points: np.ndarray, beta0: np.ndarray, opts: FitOptions):
    """One damped Gauss-Newton descent from beta0.  Returns (beta, e2n, iters, converged, trace)."""
    scale = _data_scale(points)

    def residuals(beta):
        return _normalized_residuals(family, beta, points, scale)

    beta = beta0.copy()
    try:
        r = residuals(beta)
    except (OverflowError, FloatingPointError):
        raise InvalidInputError("non-finite residuals at the initial model") from None
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("non-finite residuals at the initial model")
    e2 = float(r @ r)
    trace = [e2]
    lam = opts.lambda0
    converged = False
    iterations = 0

    for _ in range(opts.max_iterations):
        jac = _fd_jacobian(residuals, beta, opts.fd_step)
        g = jac.T @ r
        if np.max(np.abs(g)) < opts.gradient_tolerance:
            converged = True
            break
        jtj = jac.T @ jac
        diag = np.diag(jtj).copy()
        diag[diag <= 0] = np.max(diag) * 1e-12 + 1e-300  # guard flat directions

        accepted = False
        while lam <= opts.lambda_max:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= opts.lambda_up
                continue
            if np.max(np.abs(step)) > opts.max_step:
                lam *= opts.lambda_up  # runaway along a flat direction; damp harder
                continue
            cand = beta + step
            cand[-3] = transform2d.wrap_angle(cand[-3])  # residuals are 2*pi-periodic
            try:
                rc = residuals(cand)
                e2c = float(rc @ rc) if np.all(np.isfinite(rc)) else np.inf
            except (OverflowError, FloatingPointError):
                e2c = np.inf
            if e2c < e2:
                beta, r, e2 = cand, rc, e2c
                trace.append(e2)
                lam = max(lam / opts.lambda_down, 1e-15)
                accepted = True
                iterations += 1
                if np.max(np.abs(step)) < opts.step_tolerance * (1.0 + np.max(np.abs(beta))):
                    converged = True
                break
            lam *= opts.lambda_up
        if not accepted or converged:
            break

    return beta, e2, iterations, converged, trace


def lm_fit(family: CurveFamily, points, init: CurveModel | None = None,
           opts: FitOptions | None = None) -> FitResult:
    """Fit a posed curve of the given family to the points.

    Starts from ``init`` (default :func:`initial_guess`), runs damped
    least squares with finite-difference Jacobians, and retries from a few
    orientations spread over the symmetry sector whenever the first
    descent stalls or leaves a clearly non-zero residual.  ``converged``
    is False when no tolerance was met within the iteration budget; that
    is a result, not an exception.
    """
    pts = np.asarray(points, dtype=float)
    opts = opts or FitOptions()
    if init is None:
        init = initial_guess(family, pts)
    if init.family != family:
        raise InvalidInputError(f"init model is {init.family.label}, expected {family.label}")
    n_params = 3 + curves.arity(family)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < n_params:
        raise InvalidInputError(f"need >= {n_params} points with shape (n, 2), got {pts.shape}")

    beta0 = _beta_from_model(init)
    best = _lm_core(family, pts, beta0, opts)

    threshold = opts.multistart_e2_per_point * len(pts)
    if not best[3] or best[1] > threshold:
        sector = curves.symmetry_sector(family)
        for k in range(1, opts.multistart_phases):
            start = beta0.copy()
            start[-3] = init.pose.theta + sector * k / opts.multistart_phases
            try:
                cand = _lm_core(family, pts, start, opts)
            except InvalidInputError:
                continue
            if cand[1] < best[1]:
                best = cand
            if best[3] and best[1] <= threshold:
                break

    beta, e2n, iterations, converged, trace = best
    model = _model_from_beta(family, beta)
    theta = transform2d.wrap_to_sector(model.pose.theta, curves.symmetry_sector(family))
    model = CurveModel(model.family, model.params, Pose2(theta, model.pose.x0, model.pose.y0))
    raw = transform2d.residual_vector(model, pts)
    return FitResult(model=model, e2=float(raw @ raw), e2_normalized=e2n,
                     iterations=iterations, converged=converged, trace=trace)


def sampson_distances(model: CurveModel, points) -> np.ndarray:
    """First-order geometric distance of each point to the posed curve.

    Implicit residual divided by the norm of its spatial gradient; unlike
    the raw residual this is in metres and comparable across families.
    """
    pts = np.asarray(points, dtype=float)
    r = transform2d.residual_vector(model, pts)
    h = 1e-6 * max(1.0, model.params.a)
    gx = (transform2d.residual_vector(model, pts + [h, 0.0]) - transform2d.residual_vector(model, pts - [h, 0.0])) / (2 * h)
    gy = (transform2d.residual_vector(model, pts + [0.0, h]) - transform2d.residual_vector(model, pts - [0.0, h])) / (2 * h)
    grad = np.hypot(gx, gy)
    floor = 1e-12 * max(1.0, float(np.max(grad)))
    return np.abs(r) / np.maximum(grad, floor)


def _axis_grid(bounds, name: str, resolution: int) -> np.ndarray:
    try:
        lo, hi = bounds[name]
    except (KeyError, TypeError, ValueError):
        raise InvalidInputError(f"bounds must provide a (lo, hi) pair for {name!r}") from None
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise InvalidInputError(f"invalid bounds for {name!r}: ({lo}, {hi})")
    return np.linspace(lo, hi, resolution)


def grid_oracle(family: CurveFamily, points, bounds: dict, resolution: int = 10) -> CurveModel:
    """Brute-force minimiser of the normalised objective over a parameter box.

    Exhaustively evaluates every grid node; used in tests as an
    optimisation-free reference the iterative fitter must match or beat.
    ``bounds`` maps parameter names (a, b, theta, x0, y0) to (lo, hi).
    """
    pts = np.asarray(points, dtype=float)
    if resolution < 10:
        raise InvalidInputError(f"resolution must be >= 10 per axis, got {resolution}")
    if not bounds:
        raise InvalidInputError("bounds must be a non-empty mapping")
    two = curves.arity(family) == 2
    a_grid = _axis_grid(bounds, "a", resolution)
    b_grid = _axis_grid(bounds, "b", resolution) if two else np.array([None])
    t_grid = _axis_grid(bounds, "theta", resolution)
    x_grid = _axis_grid(bounds, "x0", resolution)
    y_grid = _axis_grid(bounds, "y0", resolution)
    if np.any(a_grid <= 0) or (two and np.any(b_grid <= 0)):
        raise InvalidInputError("size bounds must be strictly positive")

    offsets = np.stack(np.meshgrid(x_grid, y_grid, indexing="ij"), axis=-1).reshape(-1, 2)
    scale = _data_scale(pts) ** curves.degree(family)
    best = (np.inf, None)
    for a in a_grid:
        for b in b_grid:
            params = CanonicalParams(float(a), float(b) if two else None)
            for theta in t_grid:
                rot = transform2d.rotate_points(pts, -theta)          # (n, 2)
                rot_off = transform2d.rotate_points(offsets, -theta)  # (g, 2)
                q = rot[None, :, :] - rot_off[:, None, :]             # (g, n, 2)
                vals = curves._implicit_xy(family, params, q[..., 0], q[..., 1]) / scale
                e2 = np.sum(vals * vals, axis=1)
                k = int(np.argmin(e2))
                if e2[k] < best[0]:
                    best = (float(e2[k]),
                            CurveModel(family, params,
                                       Pose2(float(theta), float(offsets[k, 0]), float(offsets[k, 1]))))
    return best[1]
