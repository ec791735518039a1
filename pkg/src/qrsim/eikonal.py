"""Orthotropic Eikonal activation solve on the tetrahedral mesh.

The anisotropy enters through a per-element SPD time metric

    M = f f^T / v_f^2 + s s^T / v_s^2 + n n^T / v_n^2      (speeds in cm/ms)

so the traversal time of a straight step e is sqrt(e^T M e) ms.  The
solver runs fast-iterative Jacobi sweeps with exact per-tet local updates
(vertex, edge and face-interior characteristics) plus edge relaxations on
the fast endocardial layer, from root nodes initialized at their
normalized Purkinje delays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ._fim import INF, solve_kernel
from .geometry import (TAG_LV_ENDO, TAG_RV_ENDO, CobivecoCoord, Mesh,
                       SIDE_NAMES, rt_distance)
from .scenarios import CVField

CONVERGENCE_TOL_MS = 1e-10
SNAP_LIMIT_EDGE_LENGTHS = 2.0
INIT_BALL_EDGE_LENGTHS = 5.0


class SolveError(RuntimeError):
    pass


class RootSnapError(ValueError):
    pass


@dataclass(frozen=True)
class RootNode:
    """An endocardial earliest-activation site with its Purkinje delay."""

    name: str
    coord: CobivecoCoord
    pk_delay: float = 0.0           # ms

    def __post_init__(self):
        if self.pk_delay < 0:
            raise ValueError(f"root {self.name}: pk_delay must be >= 0")


def default_roots() -> list[RootNode]:
    """The seven fixed earliest-activation sites (4 LV, 3 RV), zero delay."""
    sites = [
        ("lv_mid_septum", "LV", 0.50, 1.0 / 6.0),
        ("lv_basal_anterior_paraseptal", "LV", 0.80, 0.36),
        ("lv_mid_posterior_1", "LV", 0.45, 0.80),
        ("lv_mid_posterior_2", "LV", 0.45, 0.92),
        ("rv_mid_septum", "RV", 0.50, 1.0 / 6.0),
        ("rv_free_wall_1", "RV", 0.50, 0.55),
        ("rv_free_wall_2", "RV", 0.50, 0.80),
    ]
    return [RootNode(name, CobivecoCoord(1.0, ab, rt, side))
            for name, side, ab, rt in sites]


def normalize_root_times(delays) -> np.ndarray:
    """Purkinje delays shifted so the earliest root activates at t = 0."""
    delays = np.asarray(delays, dtype=np.float64)
    if delays.size == 0:
        raise ValueError("need at least one root node")
    return delays - delays.min()


def snap_roots(mesh: Mesh, roots: list[RootNode]) -> np.ndarray:
    """Nearest endocardial mesh node per root, matching side and (ab, rt).

    The coordinate residual is converted to a physical distance with
    mesh-scale estimates; snapping farther than twice the median edge
    length is an error rather than a silently moved activation site.
    """
    if not roots:
        raise RootSnapError("need at least one root node")
    span = mesh.nodes.max(axis=0) - mesh.nodes.min(axis=0)
    l_ab = 1.3 * span[2]
    l_rt = np.pi * 0.5 * (span[0] + span[1])
    limit = SNAP_LIMIT_EDGE_LENGTHS * mesh.median_edge_length()

    snapped = np.empty(len(roots), dtype=np.int64)
    for k, root in enumerate(roots):
        want_tag = TAG_LV_ENDO if root.coord.side == "LV" else TAG_RV_ENDO
        cand = np.where(mesh.surface_tag == want_tag)[0]
        if cand.size == 0:
            raise RootSnapError(f"root {root.name}: no {root.coord.side} endocardial "
                                f"nodes in the mesh")
        d_ab = (mesh.ab[cand] - root.coord.ab) * l_ab
        d_rt = rt_distance(mesh.rt[cand], root.coord.rt) * l_rt
        dist = np.hypot(d_ab, d_rt)
        dmin = float(dist.min())
        if dmin > limit:
            raise RootSnapError(
                f"root {root.name} at (ab={root.coord.ab:.3f}, rt={root.coord.rt:.3f}, "
                f"{root.coord.side}) snaps {dmin:.2f} cm away, beyond "
                f"{SNAP_LIMIT_EDGE_LENGTHS:g} edge lengths ({limit:.2f} cm)")
        # exact distance ties resolve by coordinates, never by node numbering
        sel = cand[dist <= dmin + 1e-12]
        order = np.lexsort((mesh.nodes[sel, 2], mesh.nodes[sel, 1], mesh.nodes[sel, 0],
                            mesh.rt[sel], mesh.ab[sel]))
        snapped[k] = sel[order[0]]
    return snapped


@dataclass
class ActivationMap:
    """Per-node activation times (ms) and the snapped root nodes."""

    times: np.ndarray
    root_nodes: np.ndarray

    def __post_init__(self):
        self.times = np.ascontiguousarray(self.times, dtype=np.float64)
        self.times.flags.writeable = False

    def summary(self) -> dict:
        return {"min_ms": float(self.times.min()),
                "max_ms": float(self.times.max()),
                "mean_ms": float(self.times.mean())}

    def to_text(self) -> str:
        return "".join(f"{i} {t:.6f}\n" for i, t in enumerate(self.times))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def metric_tensors(cv: CVField) -> np.ndarray:
    """Per-element time metric (ms^2/cm^2) from frames and speeds."""
    m = np.zeros((cv.frames.shape[0], 3, 3))
    for row, v in ((0, cv.v_f), (1, cv.v_s), (2, cv.v_n)):
        d = cv.frames[:, row, :]
        m += d[:, :, None] * d[:, None, :] / (v[:, None, None] / 1000.0) ** 2
    return m


def _node_tet_incidence(mesh: Mesh):
    if "incidence" not in mesh._cache:
        flat = mesh.tets.ravel()
        order = np.argsort(flat, kind="stable")
        inc_tet = (order // 4).astype(np.int64)
        counts = np.bincount(flat, minlength=mesh.num_nodes)
        inc_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        mesh._cache["incidence"] = (inc_ptr, inc_tet)
    return mesh._cache["incidence"]


def _endo_edges(mesh: Mesh, endo_speed: np.ndarray):
    """Symmetric CSR of fast-layer edge relaxations (times in ms).

    An edge participates when both endpoints carry an endocardial speed;
    the slower endpoint governs.
    """
    edges = mesh.edges()
    s0 = endo_speed[edges[:, 0]]
    s1 = endo_speed[edges[:, 1]]
    keep = (s0 > 0) & (s1 > 0)
    e = edges[keep]
    speed = np.minimum(s0[keep], s1[keep]) / 1000.0      # cm/ms
    length = np.linalg.norm(mesh.nodes[e[:, 0]] - mesh.nodes[e[:, 1]], axis=1)
    w = length / speed

    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    tt = np.concatenate([w, w])
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=mesh.num_nodes)
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return ptr, dst[order].astype(np.int64), tt[order]


def _root_ball_geometry(mesh: Mesh, root_id: int, radius: float):
    """Chord decomposition for every node within `radius` of a root.

    Each straight root-to-node chord is clipped against the tets it
    crosses and broken into elementary subintervals; where slivers of
    adjacent tets overlap, all covering tets are kept so the solve can
    charge the cheapest one.  Chords not fully covered (leaving the wall
    through a cavity) are dropped.  Purely geometric, cached per mesh.

    Returns (node ids (k,), ptr (k+1,), sub lengths (n,), covering tet ids
    (n, 4) padded with -1).
    """
    key = ("root_ball", root_id, round(radius, 12))
    if key in mesh._cache:
        return mesh._cache[key]
    src = mesh.nodes[root_id]
    d = np.linalg.norm(mesh.nodes - src, axis=1)
    ball = np.where((d > 1e-12) & (d <= radius))[0]
    empty = (np.empty(0, np.int64), np.zeros(1, np.int64),
             np.empty(0), np.empty((0, 4), np.int64))
    if ball.size == 0:
        mesh._cache[key] = empty
        return empty
    vdist = d[mesh.tets].min(axis=1)
    cand = np.where(vdist <= radius + mesh.max_edge_length())[0]

    p = mesh.nodes[mesh.tets[cand]]                      # (m, 4, 3)
    # outward face normals, face k opposite vertex k
    normals = np.empty((len(cand), 4, 3))
    offs = np.empty((len(cand), 4))
    for k in range(4):
        rest = [j for j in range(4) if j != k]
        n = np.cross(p[:, rest[1]] - p[:, rest[0]], p[:, rest[2]] - p[:, rest[0]])
        inward = np.einsum("ij,ij->i", n, p[:, k] - p[:, rest[0]])
        n *= -np.sign(inward)[:, None]
        normals[:, k] = n
        offs[:, k] = np.einsum("ij,ij->i", n, p[:, rest[0]])
    na = np.einsum("hkj,j->hk", normals, src) - offs     # (m, 4)

    ids = []
    ptr = [0]
    sub_len = []
    sub_tets = []
    for start in range(0, len(ball), 64):
        chunk = ball[start:start + 64]
        seg = mesh.nodes[chunk] - src                    # (b, 3)
        nu = np.einsum("hkj,ij->ihk", normals, seg)      # (b, m, 4)
        with np.errstate(divide="ignore", invalid="ignore"):
            tcross = -na[None] / nu
        lo = np.where(nu < 0, tcross, -np.inf)
        hi = np.where(nu > 0, tcross, np.inf)
        lo = np.where((np.abs(nu) <= 1e-14) & (na[None] > 1e-12), np.inf, lo)
        t0 = np.maximum(lo.max(axis=2), 0.0)
        t1 = np.minimum(hi.min(axis=2), 1.0)
        for b in range(len(chunk)):
            hit = np.where(t1[b] - t0[b] > 1e-12)[0]
            if hit.size == 0:
                continue
            ivs = sorted(zip(t0[b, hit], t1[b, hit], cand[hit]))
            points = sorted({0.0, 1.0} | {x for iv in ivs for x in iv[:2]})
            covered = 0.0
            subs = []
            for a, bb in zip(points[:-1], points[1:]):
                mid = 0.5 * (a + bb)
                cover = [t for (x0, x1, t) in ivs if x0 - 1e-12 <= mid <= x1 + 1e-12]
                if cover:
                    subs.append((bb - a, cover[:4]))
                    covered += bb - a
            if covered >= 1.0 - 1e-6:
                ids.append(chunk[b])
                for length, cover in subs:
                    sub_len.append(length)
                    sub_tets.append(cover + [-1] * (4 - len(cover)))
                ptr.append(len(sub_len))
    out = (np.asarray(ids, dtype=np.int64), np.asarray(ptr, dtype=np.int64),
           np.asarray(sub_len), np.asarray(sub_tets, dtype=np.int64).reshape(-1, 4))
    mesh._cache[key] = out
    return out


def _root_ball_init(mesh: Mesh, metric: np.ndarray, root_id: int, radius: float):
    """Admissible straight-chord times from a root to nearby nodes.

    The chord time is the line integral of the local slowness (cheapest
    covering tet on overlap slivers), so initialization can never undercut
    the true solution; it removes the point-source error of the sweep.
    """
    ids, ptr, sub_len, sub_tets = _root_ball_geometry(mesh, root_id, radius)
    if ids.size == 0:
        return ids, np.empty(0)
    seg = mesh.nodes[np.repeat(ids, np.diff(ptr))] - mesh.nodes[root_id]
    rates = np.full((len(sub_len), 4), np.inf)
    for c in range(4):
        t = sub_tets[:, c]
        ok = t >= 0
        rates[ok, c] = np.sqrt(np.einsum("ij,ijk,ik->i", seg[ok],
                                         metric[t[ok]], seg[ok]).clip(min=0.0))
    contrib = sub_len * rates.min(axis=1)
    vals = np.add.reduceat(contrib, ptr[:-1]) if len(contrib) else np.empty(0)
    return ids, vals


def solve(mesh: Mesh, cv: CVField, roots: list[RootNode],
          tol: float = CONVERGENCE_TOL_MS,
          init_ball_edge_lengths: float = INIT_BALL_EDGE_LENGTHS) -> ActivationMap:
    """Activation time of every node from the given root set.

    ``init_ball_edge_lengths`` sets the radius (in median edge lengths) of
    the exact straight-chord initialization around each root, which removes
    the first-order point-source error of the sweep; 0 disables it.
    """
    snapped = snap_roots(mesh, roots)
    init = normalize_root_times([r.pk_delay for r in roots])
    metric = metric_tensors(cv)
    inc_ptr, inc_tet = _node_tet_incidence(mesh)
    endo_ptr, endo_nbr, endo_time = _endo_edges(mesh, cv.endo_speed)

    init_idx = [snapped]
    init_val = [init]
    if init_ball_edge_lengths > 0:
        radius = init_ball_edge_lengths * mesh.median_edge_length()
        for rid, rt0 in zip(snapped, init):
            ids, vals = _root_ball_init(mesh, metric, int(rid), radius)
            init_idx.append(ids)
            init_val.append(rt0 + vals)
    init_idx = np.concatenate(init_idx)
    init_val = np.concatenate(init_val)

    times = solve_kernel(mesh.nodes, mesh.tets, metric, inc_ptr, inc_tet,
                         endo_ptr, endo_nbr, endo_time,
                         init_idx, init_val, tol, max_sweeps=10_000_000)
    unreachable = np.where(times >= INF * 0.5)[0]
    if unreachable.size:
        shown = ", ".join(str(i) for i in unreachable[:10])
        raise SolveError(f"{unreachable.size} nodes unreachable from the root set "
                         f"(mesh disconnected?): first ids [{shown}]")
    return ActivationMap(times=times, root_nodes=snapped)
