import numpy as np
import pytest

from qrsim.fibers import FiberError, assign_fibers
from qrsim.geometry import LV


def test_orthonormal_right_handed(coarse_mesh, coarse_frames):
    f, s, n = coarse_frames[:, 0], coarse_frames[:, 1], coarse_frames[:, 2]
    for v in (f, s, n):
        assert np.abs(np.linalg.norm(v, axis=1) - 1).max() < 1e-9
    assert np.abs((f * s).sum(1)).max() < 1e-9
    assert np.abs((f * n).sum(1)).max() < 1e-9
    assert np.abs((s * n).sum(1)).max() < 1e-9
    triple = (np.cross(f, s) * n).sum(1)
    assert np.abs(triple - 1.0).max() < 1e-9


def _inplane_angle(mesh, frames, elem):
    """Fiber angle within the local tangent plane, in degrees."""
    s = frames[elem, 1]
    z = np.array([0.0, 0.0, 1.0])
    circ = np.cross(z, s)
    circ /= np.linalg.norm(circ)
    longi = np.cross(s, circ)
    f = frames[elem, 0]
    return np.degrees(np.arctan2(f @ longi, f @ circ))


def test_epicardial_angle(default_mesh, default_frames):
    m = default_mesh
    tm_elem = m.tm[m.tets].mean(axis=1)
    # well-formed epicardial elements away from the pole
    cen = m.tet_centroids()
    rad = np.linalg.norm(cen[:, :2], axis=1)
    cand = np.where((tm_elem < 1e-6) & (rad > 1.0))[0]
    rng = np.random.default_rng(0)
    for e in rng.choice(cand, size=40, replace=False):
        assert abs(_inplane_angle(m, default_frames, e) - (-60.0)) < 1.0


def test_midwall_angle_zero(default_mesh):
    m = default_mesh
    frames = assign_fibers(m, alpha_endo=60.0, alpha_epi=-60.0)
    tm_elem = m.tm[m.tets].mean(axis=1)
    cen = m.tet_centroids()
    rad = np.linalg.norm(cen[:, :2], axis=1)
    cand = np.where((np.abs(tm_elem - 0.5) < 0.01) & (rad > 1.0)
                    & (m.side[m.tets].sum(axis=1) == 0))[0]
    rng = np.random.default_rng(1)
    for e in rng.choice(cand, size=40, replace=False):
        assert abs(_inplane_angle(m, frames, e)) < 1.0


def test_neighbor_continuity(default_mesh, default_frames):
    """No random flips: face-neighbor fiber directions differ by < 25 deg."""
    f = default_frames[:, 0]
    adj = default_mesh.face_adjacency()
    dots = np.abs((f[adj[:, 0]] * f[adj[:, 1]]).sum(1)).clip(0, 1)
    angles = np.degrees(np.arccos(dots))
    assert angles.max() < 25.0


def test_angle_validation(coarse_mesh):
    with pytest.raises(FiberError):
        assign_fibers(coarse_mesh, alpha_endo=120.0)
    with pytest.raises(FiberError):
        assign_fibers(coarse_mesh, alpha_epi=-91.0)


def test_no_nans_anywhere(coarse_frames):
    assert np.isfinite(coarse_frames).all()
