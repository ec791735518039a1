"""Tetrahedral biventricular mesh with per-node wall coordinates.

Coordinate conventions (fixed across the package):

* ``tm`` transmural, 0 at the epicardium, 1 at the endocardium.
* ``ab`` apicobasal, 0 at the apex, 1 at the base plane.
* ``rt`` rotational in [0, 1), 0 at the posterior LV/RV junction,
  increasing counterclockwise viewed from the base.  ``rt`` arithmetic
  is modular.
* ``side`` chamber label, LV or RV.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LV = 0
RV = 1
SIDE_NAMES = {LV: "LV", RV: "RV"}
SIDE_CODES = {"LV": LV, "RV": RV}

TAG_NONE = 0
TAG_EPI = 1
TAG_LV_ENDO = 2
TAG_RV_ENDO = 3
TAG_BASE = 4
TAG_NAMES = {TAG_NONE: "none", TAG_EPI: "epi", TAG_LV_ENDO: "lv_endo",
             TAG_RV_ENDO: "rv_endo", TAG_BASE: "base"}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}

LAYER_NONE = 0
LAYER_SPARSE = 1
LAYER_DENSE = 2
LAYER_NAMES = {LAYER_NONE: "none", LAYER_SPARSE: "sparse", LAYER_DENSE: "dense"}
LAYER_CODES = {v: k for k, v in LAYER_NAMES.items()}


class MeshError(ValueError):
    """Raised for malformed meshes or mesh files."""


def rt_distance(a, b):
    """Modular distance on the rotational coordinate (period 1)."""
    d = np.abs(np.asarray(a) - np.asarray(b))
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class CobivecoCoord:
    """A single wall coordinate (tm, ab, rt, side)."""

    tm: float
    ab: float
    rt: float
    side: str = "LV"

    def __post_init__(self):
        if not (0.0 <= self.tm <= 1.0):
            raise ValueError(f"tm={self.tm} outside [0, 1]")
        if not (0.0 <= self.ab <= 1.0):
            raise ValueError(f"ab={self.ab} outside [0, 1]")
        if not (0.0 <= self.rt < 1.0):
            raise ValueError(f"rt={self.rt} outside [0, 1)")
        if self.side not in SIDE_CODES:
            raise ValueError(f"side={self.side!r} not one of LV, RV")


@dataclass
class Mesh:
    """Immutable tetrahedral mesh with wall coordinates and surface tags.

    Arrays are locked after construction; concurrent reads are safe.

    Attributes
    ----------
    nodes : (n, 3) float64, positions in cm
    tets : (m, 4) int32, node indices, positively oriented
    tm, ab, rt : (n,) float64 wall coordinates
    side : (n,) uint8, LV=0 / RV=1
    surface_tag : (n,) uint8, one of TAG_*
    endo_layer : (n,) uint8, one of LAYER_*
    """

    nodes: np.ndarray
    tets: np.ndarray
    tm: np.ndarray
    ab: np.ndarray
    rt: np.ndarray
    side: np.ndarray
    surface_tag: np.ndarray
    endo_layer: np.ndarray

    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        self.tets = np.ascontiguousarray(self.tets, dtype=np.int32)
        for name in ("tm", "ab", "rt"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        for name in ("side", "surface_tag", "endo_layer"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.uint8))
        for arr in (self.nodes, self.tets, self.tm, self.ab, self.rt,
                    self.side, self.surface_tag, self.endo_layer):
            arr.flags.writeable = False

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_tets(self) -> int:
        return self.tets.shape[0]

    def coord_at(self, i: int) -> CobivecoCoord:
        return CobivecoCoord(float(self.tm[i]), float(self.ab[i]),
                             float(self.rt[i]), SIDE_NAMES[int(self.side[i])])

    # -- geometric operators -------------------------------------------------

    def tet_volumes(self) -> np.ndarray:
        """Signed volume per tet (positive after orientation)."""
        if "volumes" not in self._cache:
            p = self.nodes[self.tets]
            d1 = p[:, 1] - p[:, 0]
            d2 = p[:, 2] - p[:, 0]
            d3 = p[:, 3] - p[:, 0]
            self._cache["volumes"] = np.einsum("ij,ij->i", d1, np.cross(d2, d3)) / 6.0
        return self._cache["volumes"]

    def tet_centroids(self) -> np.ndarray:
        if "centroids" not in self._cache:
            self._cache["centroids"] = self.nodes[self.tets].mean(axis=1)
        return self._cache["centroids"]

    def gradient_operator(self) -> np.ndarray:
        """Per-tet (3, 4) matrices G with grad(f) = G @ f[tet] exact on P1 fields."""
        if "gradop" not in self._cache:
            p = self.nodes[self.tets]
            # rows of inv([d1 d2 d3]) give gradients of barycentric coords 1..3
            e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=1)
            inv = np.linalg.inv(e)  # solves (edge rows) @ grad = df
            g = np.empty((self.num_tets, 3, 4))
            g[:, :, 1:] = inv
            g[:, :, 0] = -inv.sum(axis=2)
            self._cache["gradop"] = g
        return self._cache["gradop"]

    def element_gradient(self, f: np.ndarray) -> np.ndarray:
        """Exact per-tet gradient of the piecewise-linear interpolant of f."""
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (self.num_nodes,):
            raise ValueError(f"field length {f.shape} does not match node count {self.num_nodes}")
        return np.einsum("mik,mk->mi", self.gradient_operator(), f[self.tets])

    def element_coords(self):
        """Centroid wall coordinate per tet: (tm, ab, rt, side) arrays.

        rt is averaged circularly; side is the majority of the four nodes
        (ties resolved to LV).
        """
        if "elem_coords" not in self._cache:
            t = self.tets
            tm = self.tm[t].mean(axis=1)
            ab = self.ab[t].mean(axis=1)
            ang = 2.0 * np.pi * self.rt[t]
            rt = (np.arctan2(np.sin(ang).mean(axis=1), np.cos(ang).mean(axis=1))
                  / (2.0 * np.pi)) % 1.0
            side = (self.side[t].sum(axis=1) > 2).astype(np.uint8)
            self._cache["elem_coords"] = (tm, ab, rt, side)
        return self._cache["elem_coords"]

    def edges(self) -> np.ndarray:
        """Unique undirected edges (k, 2) over all tets."""
        if "edges" not in self._cache:
            t = self.tets
            pairs = np.concatenate([t[:, [0, 1]], t[:, [0, 2]], t[:, [0, 3]],
                                    t[:, [1, 2]], t[:, [1, 3]], t[:, [2, 3]]])
            pairs = np.sort(pairs, axis=1)
            self._cache["edges"] = np.unique(pairs, axis=0)
        return self._cache["edges"]

    def median_edge_length(self) -> float:
        if "med_edge" not in self._cache:
            e = self.edges()
            d = np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)
            self._cache["med_edge"] = float(np.median(d))
        return self._cache["med_edge"]

    def boundary_faces(self) -> np.ndarray:
        """Triangles (k, 3) that belong to exactly one tet."""
        if "boundary" not in self._cache:
            self._cache["boundary"] = boundary_faces_of(self.tets)
        return self._cache["boundary"]

    def face_adjacency(self) -> np.ndarray:
        """Pairs (k, 2) of tet indices sharing a triangular face."""
        if "face_adj" not in self._cache:
            faces = _all_faces(self.tets)
            tid = np.tile(np.arange(self.num_tets), 4)
            order = np.lexsort(faces.T[::-1])
            fs, ts = faces[order], tid[order]
            same = (fs[1:] == fs[:-1]).all(axis=1)
            self._cache["face_adj"] = np.stack([ts[:-1][same], ts[1:][same]], axis=1)
        return self._cache["face_adj"]

    def max_edge_length(self) -> float:
        if "max_edge" not in self._cache:
            e = self.edges()
            d = np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)
            self._cache["max_edge"] = float(d.max())
        return self._cache["max_edge"]


def _all_faces(tets: np.ndarray) -> np.ndarray:
    f = np.concatenate([tets[:, [0, 1, 2]], tets[:, [0, 1, 3]],
                        tets[:, [0, 2, 3]], tets[:, [1, 2, 3]]])
    return np.sort(f, axis=1)


def boundary_faces_of(tets: np.ndarray) -> np.ndarray:
    """Triangles (k, 3) that belong to exactly one tet of the array."""
    faces = _all_faces(tets)
    order = np.lexsort(faces.T[::-1])
    faces = faces[order]
    dup_next = np.concatenate([(faces[1:] == faces[:-1]).all(axis=1), [False]])
    dup_prev = np.concatenate([[False], dup_next[:-1]])
    return faces[~(dup_next | dup_prev)]


def orient_tets(nodes: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Swap two vertices of negatively oriented tets so all volumes are > 0."""
    p = nodes[tets]
    vol = np.einsum("ij,ij->i", p[:, 1] - p[:, 0],
                    np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]))
    flipped = tets.copy()
    neg = vol < 0
    flipped[neg] = flipped[neg][:, [0, 1, 3, 2]]
    return flipped


def validate_mesh(mesh: Mesh) -> None:
    """Check all structural invariants; raise MeshError naming the offender."""
    n, m = mesh.num_nodes, mesh.num_tets
    if n == 0 or m == 0:
        raise MeshError("mesh has no nodes or no tets")
    bad = np.where((mesh.tets < 0) | (mesh.tets >= n))[0]
    if bad.size:
        i = int(bad[0])
        raise MeshError(f"tets[{i}]: node index {int(mesh.tets[i].max())} out of range (n={n})")
    used = np.zeros(n, dtype=bool)
    used[mesh.tets.ravel()] = True
    if not used.all():
        raise MeshError(f"node {int(np.where(~used)[0][0])} not referenced by any tet")
    vols = mesh.tet_volumes()
    if (vols <= 0).any():
        i = int(np.where(vols <= 0)[0][0])
        raise MeshError(f"tets[{i}]: non-positive volume {vols[i]:.3e}")
    if not (np.isfinite(mesh.tm).all() and (mesh.tm >= -1e-12).all() and (mesh.tm <= 1 + 1e-12).all()):
        i = int(np.where(~((mesh.tm >= -1e-12) & (mesh.tm <= 1 + 1e-12)))[0][0])
        raise MeshError(f"coords[{i}]: tm={mesh.tm[i]} outside [0, 1]")
    if not ((mesh.ab >= -1e-12).all() and (mesh.ab <= 1 + 1e-12).all()):
        i = int(np.where(~((mesh.ab >= -1e-12) & (mesh.ab <= 1 + 1e-12)))[0][0])
        raise MeshError(f"coords[{i}]: ab={mesh.ab[i]} outside [0, 1]")
    if not ((mesh.rt >= 0).all() and (mesh.rt < 1).all()):
        i = int(np.where(~((mesh.rt >= 0) & (mesh.rt < 1)))[0][0])
        raise MeshError(f"coords[{i}]: rt={mesh.rt[i]} outside [0, 1)")
    # faces may appear at most twice; boundary (once) faces form a closed surface
    ufaces, counts = np.unique(_all_faces(mesh.tets), axis=0, return_counts=True)
    if (counts > 2).any():
        i = int(np.where(counts > 2)[0][0])
        raise MeshError(f"face {tuple(int(x) for x in ufaces[i])} shared by more than two tets")
    bfaces = mesh.boundary_faces()
    be = np.concatenate([bfaces[:, [0, 1]], bfaces[:, [0, 2]], bfaces[:, [1, 2]]])
    be = np.sort(be, axis=1)
    _, counts = np.unique(be, axis=0, return_counts=True)
    if (counts != 2).any():
        raise MeshError("boundary surface is not closed (an edge borders != 2 boundary triangles)")
