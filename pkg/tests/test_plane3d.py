import numpy as np
import pytest

from looptrack.errors import AlignmentError, DegenerateGeometryError, InvalidInputError
from looptrack.plane3d import PlaneFrame, align_to_xy, fit_plane, frame_from_plane, lift_to_3d


def tilted_circle(normal, center, radius=1.0, n=64):
    """Analytic circle in the plane with the given normal: the test oracle."""
    n_hat = np.asarray(normal, dtype=float)
    n_hat = n_hat / np.linalg.norm(n_hat)
    # build two orthonormal in-plane axes
    helper = np.array([1.0, 0.0, 0.0]) if abs(n_hat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n_hat, helper)
    u /= np.linalg.norm(u)
    v = np.cross(n_hat, u)
    ts = 2 * np.pi * np.arange(n) / n
    return center + radius * (np.outer(np.cos(ts), u) + np.outer(np.sin(ts), v))


def test_horizontal_plane():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-3, 3, 40), rng.uniform(-3, 3, 40), np.full(40, 5.0)])
    frame = fit_plane(pts)
    assert np.allclose(np.abs(frame.normal), [0, 0, 1], atol=1e-12)
    assert frame.sigma[2] < 1e-12
    assert frame.gamma == 0.0 and frame.alpha == 0.0
    assert np.allclose(frame.centroid[2], 5.0)


def test_analytic_tilted_circle_normal():
    pts = tilted_circle([1.0, 1.0, 1.0], center=np.array([0.2, -0.4, 1.2]))
    frame = fit_plane(pts)
    expected = np.ones(3) / np.sqrt(3.0)
    assert np.linalg.norm(frame.normal - expected) < 1e-9
    assert frame.sigma[2] < 1e-10 * frame.sigma[0]


def test_noisy_plane_sigma_ratio():
    rng = np.random.default_rng(42)
    base = tilted_circle([0.3, -0.5, 0.8], center=np.zeros(3), radius=2.0, n=400)
    noisy = base + rng.normal(scale=0.01, size=base.shape)
    frame = fit_plane(noisy)
    assert frame.sigma[2] / frame.sigma[1] < 0.05


def test_fit_plane_degenerate_inputs():
    with pytest.raises(DegenerateGeometryError):
        fit_plane(np.zeros((2, 3)))
    line = np.outer(np.linspace(0, 1, 10), [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateGeometryError):
        fit_plane(line)
    with pytest.raises(DegenerateGeometryError):
        fit_plane(np.tile([1.0, 2.0, 3.0], (5, 1)))
    with pytest.raises(InvalidInputError):
        fit_plane(np.full((5, 3), np.nan))


def test_align_flat_points_is_centred_identity():
    rng = np.random.default_rng(1)
    xy = rng.uniform(-2, 2, size=(50, 2))
    pts = np.column_stack([xy, np.zeros(50)])
    frame = fit_plane(pts)
    flat = align_to_xy(pts, frame)
    assert np.max(np.abs(flat - (xy - xy.mean(axis=0)))) < 1e-12


def test_align_tilted_circle_preserves_radii():
    pts = tilted_circle([1.0, 0.0, 1.0], center=np.array([3.0, 1.0, -2.0]))
    frame = fit_plane(pts)
    flat = align_to_xy(pts, frame)
    radii = np.linalg.norm(flat, axis=1)
    assert np.max(np.abs(radii - 1.0)) < 1e-9


def test_align_preserves_pairwise_distances():
    rng = np.random.default_rng(3)
    pts = tilted_circle([0.2, 0.7, 0.4], center=np.array([1.0, 2.0, 3.0]), n=40)
    frame = fit_plane(pts)
    flat = align_to_xy(pts, frame)
    idx = rng.integers(0, len(pts), size=(60, 2))
    d3 = np.linalg.norm(pts[idx[:, 0]] - pts[idx[:, 1]], axis=1)
    d2 = np.linalg.norm(flat[idx[:, 0]] - flat[idx[:, 1]], axis=1)
    assert np.max(np.abs(d3 - d2)) <= 1e-9 * np.maximum(d3, 1.0).max()


def test_align_rejects_mismatched_frame():
    pts = tilted_circle([0.0, 0.0, 1.0], center=np.zeros(3))
    frame = fit_plane(pts)
    other = pts + np.array([0.0, 0.0, 2.0]) * np.arange(len(pts))[:, None]
    with pytest.raises(AlignmentError):
        align_to_xy(other, frame)


def test_fit_plane_rigid_motion_invariance():
    rng = np.random.default_rng(8)
    pts = tilted_circle([0.1, 0.5, 1.0], center=np.zeros(3), n=48)
    frame = fit_plane(pts)
    # random rotation via QR of a Gaussian matrix
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    shift = np.array([4.0, -1.0, 2.0])
    moved = pts @ q.T + shift
    frame2 = fit_plane(moved)
    expected = q @ frame.normal
    if expected[2] < 0:
        expected = -expected
    assert np.linalg.norm(frame2.normal - expected) < 1e-9
    assert np.allclose(frame2.sigma, frame.sigma, atol=1e-9)


def test_lift_round_trips():
    # flat points
    xy = np.random.default_rng(5).uniform(-1, 1, size=(30, 2))
    pts = np.column_stack([xy, np.zeros(30)])
    frame = fit_plane(pts)
    assert np.max(np.abs(lift_to_3d(align_to_xy(pts, frame), frame) - pts)) < 1e-12
    # tilted circle
    pts = tilted_circle([1.0, -0.3, 0.8], center=np.array([0.5, 0.5, 0.5]))
    frame = fit_plane(pts)
    back = lift_to_3d(align_to_xy(pts, frame), frame)
    assert np.max(np.abs(back - pts)) < 1e-9
    # 2D origin maps to the centroid
    frame0 = frame_from_plane([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    assert np.allclose(lift_to_3d(np.zeros((1, 2)), frame0)[0], [1.0, 2.0, 3.0])


def test_rotation_is_orthonormal():
    for normal in ([0, 0, 1], [1, 1, 1], [0.3, -0.9, 0.1], [1, 0, 0]):
        frame = frame_from_plane(normal, np.zeros(3))
        r = frame.rotation()
        assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-10
        # frame normal maps onto +z
        assert np.allclose(r @ frame.normal, [0, 0, 1], atol=1e-12)


def test_frame_json_round_trip():
    frame = frame_from_plane([0.2, 0.5, 0.9], [1.0, -2.0, 0.5])
    back = PlaneFrame.from_dict(frame.to_dict())
    assert np.allclose(back.normal, frame.normal)
    assert np.allclose(back.centroid, frame.centroid)
    assert back.gamma == frame.gamma and back.alpha == frame.alpha
