"""Canonical definitions of the nine closed-curve families.

Every family is described by a polynomial implicit equation ``f(x, y) = 0``
in a canonical pose: centred at the origin, unrotated, with one or two
positive size parameters (``a``, optionally ``b``).  In-plane rotation and
offset are composed on top of these canonical forms by
:mod:`looptrack.transform2d`.

Implicit forms are kept in left-minus-right shape so that points on the
curve evaluate to zero and the sign/magnitude vary continuously off the
curve, which is what the least-squares fitter needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "CurveFamily",
    "CanonicalParams",
    "arity",
    "degree",
    "symmetry_sector",
    "implicit_value",
    "implicit_values",
    "sample_parametric",
    "parametric_points",
]

TWO_PI = 2.0 * np.pi


class CurveFamily(IntEnum):
    """The nine supported closed-curve families.

    Integer codes are stable and double as classifier labels.
    """

    CIRCLE_ELLIPSE = 0
    ASTROID = 1
    DELTOID = 2
    LIMACON = 3
    NEPHROID = 4
    QUADRIFOLIUM = 5
    SQUIRCLE = 6
    LEMNISCATE_BERNOULLI = 7
    LEMNISCATE_GERONO = 8

    @property
    def label(self) -> str:
        """Lowercase snake-case name used in every file format."""
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "CurveFamily":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            valid = ", ".join(f.label for f in cls)
            raise InvalidInputError(f"unknown curve family {label!r}; expected one of: {valid}") from None


_ARITY = {
    CurveFamily.CIRCLE_ELLIPSE: 2,
    CurveFamily.ASTROID: 1,
    CurveFamily.DELTOID: 1,
    CurveFamily.LIMACON: 2,
    CurveFamily.NEPHROID: 1,
    CurveFamily.QUADRIFOLIUM: 1,
    CurveFamily.SQUIRCLE: 1,
    CurveFamily.LEMNISCATE_BERNOULLI: 1,
    CurveFamily.LEMNISCATE_GERONO: 1,
}

# Polynomial degree of the implicit form (astroid counted in its
# rationalised degree-6 shape, see _implicit_xy).
_DEGREE = {
    CurveFamily.CIRCLE_ELLIPSE: 2,
    CurveFamily.ASTROID: 6,
    CurveFamily.DELTOID: 4,
    CurveFamily.LIMACON: 4,
    CurveFamily.NEPHROID: 6,
    CurveFamily.QUADRIFOLIUM: 6,
    CurveFamily.SQUIRCLE: 4,
    CurveFamily.LEMNISCATE_BERNOULLI: 4,
    CurveFamily.LEMNISCATE_GERONO: 4,
}

# Smallest rotation angle that maps the canonical point set onto itself.
# Used to wrap fitted orientations into an identifiable range.
_SECTOR = {
    CurveFamily.CIRCLE_ELLIPSE: np.pi,
    CurveFamily.ASTROID: np.pi / 2.0,
    CurveFamily.DELTOID: TWO_PI / 3.0,
    CurveFamily.LIMACON: TWO_PI,
    CurveFamily.NEPHROID: np.pi,
    CurveFamily.QUADRIFOLIUM: np.pi / 2.0,
    CurveFamily.SQUIRCLE: np.pi / 2.0,
    CurveFamily.LEMNISCATE_BERNOULLI: np.pi,
    CurveFamily.LEMNISCATE_GERONO: np.pi,
}


def arity(family: CurveFamily) -> int:
    """Number of size parameters the family uses (1 = a only, 2 = a and b)."""
    return _ARITY[CurveFamily(family)]


def degree(family: CurveFamily) -> int:
    """Polynomial degree of the family's implicit equation."""
    return _DEGREE[CurveFamily(family)]


def symmetry_sector(family: CurveFamily) -> float:
    """Rotational symmetry period of the family, in radians."""
    return _SECTOR[CurveFamily(family)]


@dataclass(frozen=True)
class CanonicalParams:
    """Size parameters of a canonical curve: ``a`` always, ``b`` only for arity-2 families."""

    a: float
    b: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= 0.0:
            raise InvalidInputError(f"parameter a must be finite and > 0, got {self.a!r}")
        if self.b is not None and (not np.isfinite(self.b) or self.b <= 0.0):
            raise InvalidInputError(f"parameter b must be finite and > 0, got {self.b!r}")


def validate_params(family: CurveFamily, params: CanonicalParams) -> None:
    """Raise if the parameter set does not match the family's arity."""
    k = arity(family)
    if k == 2 and params.b is None:
        raise InvalidInputError(f"{family.label} needs both a and b")
    if k == 1 and params.b is not None:
        raise InvalidInputError(f"{family.label} takes a single parameter a; b must be None")


def _implicit_xy(family: CurveFamily, params: CanonicalParams, x, y):
    """Vectorised left-minus-right evaluation of the implicit equation.

    ``x`` and ``y`` may be scalars or broadcastable arrays.
    """
    a = params.a
    if family is CurveFamily.CIRCLE_ELLIPSE:
        b = params.b
        return x * x / (a * a) + y * y / (b * b) - 1.0
    if family is CurveFamily.ASTROID:
        # x^(2/3) + y^(2/3) = a^(2/3), rationalised to the equivalent
        # degree-6 polynomial so residuals stay differentiable on the axes.
        r2 = x * x + y * y
        return (r2 - a * a) ** 3 + 27.0 * (a * x * y) ** 2
    if family is CurveFamily.DELTOID:
        r2 = x * x + y * y
        return r2 * r2 + 18.0 * a * a * r2 - 27.0 * a**4 - 8.0 * a * x * (x * x - 3.0 * y * y)
    if family is CurveFamily.LIMACON:
        b = params.b
        r2 = x * x + y * y
        return (r2 - a * x) ** 2 - b * b * r2
    if family is CurveFamily.NEPHROID:
        r2 = x * x + y * y
        return (r2 - 4.0 * a * a) ** 3 - 108.0 * a**4 * y * y
    if family is CurveFamily.QUADRIFOLIUM:
        # Generalised with a free scale a so the fit can adapt to loop size.
        r2 = x * x + y * y
        d = x * x - y * y
        return r2**3 - a * a * d * d
    if family is CurveFamily.SQUIRCLE:
        return x**4 + y**4 - a**4
    if family is CurveFamily.LEMNISCATE_BERNOULLI:
        r2 = x * x + y * y
        return r2 * r2 - 2.0 * a * a * (x * x - y * y)
    if family is CurveFamily.LEMNISCATE_GERONO:
        return x**4 - a * a * (x * x - y * y)
    raise InvalidInputError(f"unknown family {family!r}")


def implicit_value(family: CurveFamily, params: CanonicalParams, p) -> float:
    """Evaluate the family's implicit equation at a single 2D point.

    Zero exactly on the curve; sign and magnitude vary continuously off it.
    """
    validate_params(family, params)
    p = np.asarray(p, dtype=float)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise InvalidInputError(f"point must be a finite 2-vector, got {p!r}")
    return float(_implicit_xy(family, params, p[0], p[1]))


def implicit_values(family: CurveFamily, params: CanonicalParams, points) -> np.ndarray:
    """Vectorised :func:`implicit_value` over an (n, 2) array of points."""
    validate_params(family, params)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"points must have shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points contain non-finite coordinates")
    return np.asarray(_implicit_xy(family, params, pts[:, 0], pts[:, 1]), dtype=float)


def parametric_points(family: CurveFamily, params: CanonicalParams, ts) -> np.ndarray:
    """Evaluate the family's parametric form at parameter values ``ts``.

    All families use the standard trigonometric parametrisation over one
    full period t in [0, 2*pi):

    * circle/ellipse:        (a cos t, b sin t)
    * astroid:               (a cos^3 t, a sin^3 t)
    * deltoid:               a (2 cos t + cos 2t, 2 sin t - sin 2t)
    * limacon:               r(t) = b + a cos t in polar form
    * nephroid:              a (3 cos t - cos 3t, 3 sin t - sin 3t)
    * quadrifolium:          r(t) = a cos 2t in polar form
    * squircle:              a (sgn cos t * sqrt|cos t|, sgn sin t * sqrt|sin t|)
    * lemniscate (Bernoulli) a*sqrt(2) cos t / (1 + sin^2 t) * (1, sin t)
    * lemniscate (Gerono):   (a sin t, a sin t cos t)
    """
    validate_params(family, params)
    t = np.asarray(ts, dtype=float)
    a = params.a
    if family is CurveFamily.CIRCLE_ELLIPSE:
        x = a * np.cos(t)
        y = params.b * np.sin(t)
    elif family is CurveFamily.ASTROID:
        x = a * np.cos(t) ** 3
        y = a * np.sin(t) ** 3
    elif family is CurveFamily.DELTOID:
        x = a * (2.0 * np.cos(t) + np.cos(2.0 * t))
        y = a * (2.0 * np.sin(t) - np.sin(2.0 * t))
    elif family is CurveFamily.LIMACON:
        r = params.b + a * np.cos(t)
        x = r * np.cos(t)
        y = r * np.sin(t)
    elif family is CurveFamily.NEPHROID:
        x = a * (3.0 * np.cos(t) - np.cos(3.0 * t))
        y = a * (3.0 * np.sin(t) - np.sin(3.0 * t))
    elif family is CurveFamily.QUADRIFOLIUM:
        r = a * np.cos(2.0 * t)
        x = r * np.cos(t)
        y = r * np.sin(t)
    elif family is CurveFamily.SQUIRCLE:
        c, s = np.cos(t), np.sin(t)
        x = a * np.sign(c) * np.sqrt(np.abs(c))
        y = a * np.sign(s) * np.sqrt(np.abs(s))
    elif family is CurveFamily.LEMNISCATE_BERNOULLI:
        c = a * np.sqrt(2.0)
        den = 1.0 + np.sin(t) ** 2
        x = c * np.cos(t) / den
        y = c * np.sin(t) * np.cos(t) / den
    elif family is CurveFamily.LEMNISCATE_GERONO:
        x = a * np.sin(t)
        y = a * np.sin(t) * np.cos(t)
    else:
        raise InvalidInputError(f"unknown family {family!r}")
    return np.column_stack([x, y])


def sample_parametric(family: CurveFamily, params: CanonicalParams, n: int) -> np.ndarray:
    """Sample ``n`` points uniformly in parameter over one full period.

    Every returned point satisfies the family's implicit equation to
    within 1e-9 * max(1, a**degree).
    """
    if n < 4:
        raise InvalidInputError(f"need at least 4 samples, got {n}")
    ts = TWO_PI * np.arange(n) / n
    return parametric_points(family, params, ts)
