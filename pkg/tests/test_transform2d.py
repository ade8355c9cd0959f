import numpy as np
import pytest

from looptrack.curves import CanonicalParams, CurveFamily, arity, degree, sample_parametric, symmetry_sector
from looptrack.errors import InvalidInputError
from looptrack.transform2d import (
    CurveModel,
    Pose2,
    canonical_to_world,
    model_residual,
    residual_vector,
    rotate_points,
    sample_model,
    sector_distance,
    wrap_angle,
)

ALL_FAMILIES = list(CurveFamily)


def make_model(family, a=1.0, b=0.7, theta=0.0, x0=0.0, y0=0.0):
    params = CanonicalParams(a, b if arity(family) == 2 else None)
    return CurveModel(family, params, Pose2(theta, x0, y0))


def test_rotate_quarter_turn():
    assert np.allclose(rotate_points([[1.0, 0.0]], np.pi / 2), [[0.0, 1.0]], atol=1e-15)
    assert np.allclose(rotate_points([[0.3, -1.2]], 0.0), [[0.3, -1.2]])
    assert np.allclose(rotate_points([[1.0, 1.0]], np.pi), [[-1.0, -1.0]], atol=1e-12)


def test_rotate_round_trip():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(40, 2))
    for theta in rng.uniform(-np.pi, np.pi, size=8):
        back = rotate_points(rotate_points(pts, theta), -theta)
        assert np.max(np.abs(back - pts)) < 1e-12


def test_wrap_angle_range():
    for theta in (-7.0, -np.pi, 0.0, 3.2, 9.9, np.pi):
        w = wrap_angle(theta)
        assert -np.pi <= w < np.pi
        assert np.isclose(np.cos(w), np.cos(theta)) and np.isclose(np.sin(w), np.sin(theta))


def test_circle_residual_rotation_invariant():
    model = make_model(CurveFamily.CIRCLE_ELLIPSE, a=2.0, b=2.0, theta=0.7)
    assert model_residual(model, (2.0, 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_pure_translation():
    for family in ALL_FAMILIES:
        base = make_model(family)
        pts = sample_parametric(family, base.params, 16)
        shifted = make_model(family, theta=0.0, x0=3.0, y0=-1.0)
        for p in pts[:5]:
            assert model_residual(shifted, p + np.array([3.0, -1.0])) == pytest.approx(0.0, abs=1e-9)


def test_rotated_point_maps_to_canonical_frame():
    # a point rotated with the model evaluates exactly like its canonical twin
    model = make_model(CurveFamily.LEMNISCATE_BERNOULLI, a=1.0, theta=np.pi / 2)
    posed = model_residual(model, (0.0, 1.2))
    from looptrack.curves import implicit_value

    canonical = implicit_value(CurveFamily.LEMNISCATE_BERNOULLI, CanonicalParams(1.0), (1.2, 0.0))
    assert posed == pytest.approx(canonical, rel=1e-12)


def test_residual_vector_matches_scalar():
    model = make_model(CurveFamily.DELTOID, a=1.4, theta=0.3, x0=1.0, y0=2.0)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-3, 3, size=(20, 2))
    vec = residual_vector(model, pts)
    for i, p in enumerate(pts):
        assert vec[i] == pytest.approx(model_residual(model, p), rel=1e-12, abs=1e-15)


def test_residual_vector_on_and_off_curve():
    model = make_model(CurveFamily.CIRCLE_ELLIPSE, a=1.0, b=1.0)
    on = sample_model(model, 8)
    mixed = np.vstack([on[0], [5.0, 5.0]])
    vec = residual_vector(model, mixed)
    assert abs(vec[0]) < 1e-12 and abs(vec[1]) > 1.0

    dense = sample_model(model, 100)
    assert float(np.sum(residual_vector(model, dense) ** 2)) < 1e-16


def test_residual_vector_rejects_empty():
    model = make_model(CurveFamily.SQUIRCLE, a=1.0)
    with pytest.raises(InvalidInputError):
        residual_vector(model, np.empty((0, 2)))


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_posed_samples_have_zero_residual(family):
    model = make_model(family, a=2.1, b=1.2, theta=0.9, x0=-4.0, y0=2.5)
    pts = sample_model(model, 181)
    vals = residual_vector(model, pts)
    tol = 1e-9 * max(1.0, model.params.a ** degree(family))
    assert np.max(np.abs(vals)) <= tol


def test_theta_symmetry_invariance():
    rng = np.random.default_rng(2)
    probe = rng.uniform(-2, 2, size=(25, 2))
    # circle: any rotation
    c0 = make_model(CurveFamily.CIRCLE_ELLIPSE, a=1.5, b=1.5, theta=0.0)
    c1 = make_model(CurveFamily.CIRCLE_ELLIPSE, a=1.5, b=1.5, theta=1.234)
    r0 = residual_vector(c0, probe)
    r1 = residual_vector(c1, probe)
    assert np.allclose(r0, r1, atol=1e-12)
    # quadrifolium: quarter-turn period
    q0 = make_model(CurveFamily.QUADRIFOLIUM, a=1.5, theta=0.4)
    q1 = make_model(CurveFamily.QUADRIFOLIUM, a=1.5, theta=0.4 + np.pi / 2)
    assert np.allclose(residual_vector(q0, probe), residual_vector(q1, probe), atol=1e-12)


def test_sector_distance():
    sector = symmetry_sector(CurveFamily.QUADRIFOLIUM)
    assert sector == pytest.approx(np.pi / 2)
    assert sector_distance(0.1, 0.1 + np.pi / 2, sector) == pytest.approx(0.0, abs=1e-12)
    assert sector_distance(0.0, 0.2, sector) == pytest.approx(0.2)


def test_curve_model_json_round_trip():
    model = make_model(CurveFamily.LIMACON, a=1.0, b=2.5, theta=-0.4, x0=3.0, y0=-7.0)
    d = model.to_dict()
    assert d["family"] == "limacon" and "b" in d
    back = CurveModel.from_dict(d)
    assert back == model

    one = make_model(CurveFamily.NEPHROID, a=2.0, theta=0.1)
    d1 = one.to_dict()
    assert "b" not in d1
    assert CurveModel.from_dict(d1) == one


def test_canonical_world_round_trip():
    from looptrack.transform2d import world_to_canonical

    model = make_model(CurveFamily.ASTROID, a=1.1, theta=0.77, x0=5.0, y0=-3.0)
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(30, 2))
    assert np.max(np.abs(world_to_canonical(model, canonical_to_world(model, pts)) - pts)) < 1e-12
