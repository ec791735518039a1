"""Rule-based orthonormal fiber/sheet/sheet-normal frames.

The in-plane fiber angle rotates linearly with the transmural coordinate,
from ``alpha_epi`` at tm = 0 to ``alpha_endo`` at tm = 1, inside the local
tangent plane of the wall.  The sheet axis is the transmural direction
(gradient of tm), the sheet-normal completes a right-handed triad.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .geometry import Mesh

TANGENT_CONDITION = 1e-20
SMOOTHING_PASSES = 40


class FiberError(ValueError):
    pass


def _smoothed_transmural_direction(mesh: Mesh) -> np.ndarray:
    """Per-element transmural direction from the tm gradient.

    Raw per-element gradients are noisy where tm flattens out (the tapered
    RV insertion) and zero on flat patches.  Confidence-weighted averaging
    over face neighbors lets the strong, clean gradients dominate and
    diffuses a consistent direction into flat patches; magnitudes act as
    the weights.
    """
    g = mesh.element_gradient(mesh.tm)
    adj = mesh.face_adjacency()
    nt = mesh.num_tets
    ones = np.ones(len(adj))
    a = sparse.coo_matrix((ones, (adj[:, 0], adj[:, 1])), shape=(nt, nt))
    a = (a + a.T).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()
    for _ in range(SMOOTHING_PASSES):
        g = (2.0 * g + a @ g) / (deg + 2.0)[:, None]
    return g


def assign_fibers(mesh: Mesh, alpha_endo: float = 60.0, alpha_epi: float = -60.0) -> np.ndarray:
    """Per-element frames, shape (m, 3, 3): rows are fiber f, sheet s, normal n.

    Elements whose tangent plane is degenerate (apex pole column, where the
    transmural direction aligns with the long axis) copy the frame of the
    nearest well-conditioned element so no NaN ever enters the solver.
    """
    if not (-90.0 <= alpha_endo <= 90.0) or not (-90.0 <= alpha_epi <= 90.0):
        raise FiberError(f"fiber angles must lie in [-90, 90] deg, got "
                         f"endo={alpha_endo}, epi={alpha_epi}")
    grad_tm = _smoothed_transmural_direction(mesh)
    norm = np.linalg.norm(grad_tm, axis=1)
    # a flat tm patch carries no transmural direction even after smoothing;
    # treat it like the pole singularity and inherit the nearest good frame
    ok = norm > max(TANGENT_CONDITION, 1e-3 * float(np.median(norm)))
    sheet = np.zeros_like(grad_tm)
    sheet[ok] = grad_tm[ok] / norm[ok, None]

    z = np.array([0.0, 0.0, 1.0])
    circ = np.cross(np.broadcast_to(z, sheet.shape), sheet)
    cnorm = np.linalg.norm(circ, axis=1)
    ok &= cnorm > 1e-3
    circ[ok] = circ[ok] / cnorm[ok, None]
    longi = np.cross(sheet, circ)

    tm_elem = mesh.tm[mesh.tets].mean(axis=1)
    alpha = np.deg2rad(alpha_epi + tm_elem * (alpha_endo - alpha_epi))
    fiber = np.cos(alpha)[:, None] * circ + np.sin(alpha)[:, None] * longi
    normal = np.cross(fiber, sheet)

    frames = np.stack([fiber, sheet, normal], axis=1)
    if not ok.all():
        if not ok.any():
            raise FiberError("no well-conditioned element to anchor fiber frames")
        centers = mesh.tet_centroids()
        tree = cKDTree(centers[ok])
        _, nearest = tree.query(centers[~ok])
        frames[~ok] = frames[ok][nearest]
    return frames
