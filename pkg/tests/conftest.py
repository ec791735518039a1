import numpy as np
import pytest

from qrsim.fibers import assign_fibers
from qrsim.geometry import Mesh, orient_tets
from qrsim.synth import generate_synthetic_biventricle


@pytest.fixture(scope="session")
def default_mesh():
    """The default synthetic biventricle at resolution 0.2 cm."""
    return generate_synthetic_biventricle(0.2)


@pytest.fixture(scope="session")
def default_frames(default_mesh):
    return assign_fibers(default_mesh)


@pytest.fixture(scope="session")
def coarse_mesh():
    """A cheap mesh for unit tests that only need valid topology."""
    return generate_synthetic_biventricle(0.4)


@pytest.fixture(scope="session")
def coarse_frames(coarse_mesh):
    return assign_fibers(coarse_mesh)


def kuhn_box_mesh(n: int = 12, length: float = 2.0) -> Mesh:
    """Convex box tet mesh (Kuhn split of a structured grid); wall
    coordinate fields are placeholders."""
    g = np.linspace(0.0, length, n + 1)
    x, y, z = np.meshgrid(g, g, g, indexing="ij")
    pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    idx = np.arange((n + 1) ** 3).reshape(n + 1, n + 1, n + 1)
    corner = {(du, dv, dw): idx[du:n + du, dv:n + dv, dw:n + dw]
              for du in (0, 1) for dv in (0, 1) for dw in (0, 1)}
    perms = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
    tets = []
    for p in perms:
        c = np.zeros(3, dtype=int)
        path = [tuple(c)]
        for axis in p:
            c[axis] = 1
            path.append(tuple(c))
        tets.append(np.stack([corner[t].ravel() for t in path], axis=1))
    tets = orient_tets(pts, np.concatenate(tets).astype(np.int32))
    nn = len(pts)
    zeros = np.zeros(nn)
    u8 = np.zeros(nn, dtype=np.uint8)
    return Mesh(pts, tets, zeros, zeros, zeros, u8.copy(), u8.copy(), u8.copy())


@pytest.fixture(scope="session")
def box_mesh():
    return kuhn_box_mesh(12, 2.0)
