"""Synthetic two-cavity biventricular geometry.

The mesh is a structured parametric construction so that wall coordinates
are assigned analytically and surface nodes lie exactly on the analytic
surfaces:

* LV wall: a thick truncated prolate-ellipsoid shell ("bowl") spanning the
  full azimuth, with a collapsed pole column at the apex.
* RV free wall: a thin crescent ("blister") extruded outward from the
  septal sector of the bowl's outer surface.  Its rim is pinched onto the
  outer surface, a contact band merges nodes with the bowl so the two
  walls share a conforming 2D interface, and the enclosed gap forms the
  RV cavity.

Every cell is a (possibly collapsed) hexahedron split into tetrahedra with
the Kuhn subdivision; identical splitting of every cell keeps shared faces
conforming, including across the periodic seam, the pole and the
bowl/blister contact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (LAYER_DENSE, LAYER_NONE, LAYER_SPARSE, LV, RV,
                       TAG_BASE, TAG_EPI, TAG_LV_ENDO, TAG_NONE, TAG_RV_ENDO,
                       Mesh, boundary_faces_of, orient_tets, validate_mesh)

# rt convention: posterior LV/RV junction along azimuth phi0, septum spans
# rt in [0, 1/3], the RV free wall loops back over rt in [1/3, 1).
PHI0 = -np.pi / 4.0
SEPTUM_RT_SPAN = 1.0 / 3.0

# Purkinje coupling is dense over the apical two thirds of the endocardium
# and sparse toward the base.
DENSE_ENDO_AB_MAX = 2.0 / 3.0


class GeometryError(ValueError):
    """Raised for infeasible geometry parameters."""


@dataclass(frozen=True)
class GeometryParams:
    """Shape parameters of the synthetic biventricle (all cm)."""

    lv_outer_radius: float = 2.8    # equatorial semi-axis of the epicardial ellipsoid
    lv_outer_height: float = 4.8    # long semi-axis (apex depth below center)
    lv_wall_thickness: float = 1.0
    base_height: float = 1.1        # truncation plane z = base_height
    rv_wall_thickness: float = 0.45
    rv_bulge: float = 1.7           # max outward extent of the RV free wall
    rv_ab_start: float = 0.18       # apicobasal onset of the RV attachment
    min_transmural_layers: int = 5

    def validate(self) -> None:
        a_endo = self.lv_outer_radius - self.lv_wall_thickness
        c_endo = self.lv_outer_height - self.lv_wall_thickness
        if self.lv_wall_thickness <= 0 or self.lv_outer_radius <= 0 or self.lv_outer_height <= 0:
            raise GeometryError("radii and wall thickness must be positive")
        if a_endo <= 0.2:
            raise GeometryError(
                f"cavity radius {a_endo:.2f} cm too small: wall thickness must be "
                f"well below the outer radius")
        if not (0 < self.base_height < c_endo - 0.3):
            raise GeometryError(
                f"base_height {self.base_height} must lie inside the cavity "
                f"(0, {c_endo - 0.3:.2f})")
        if self.rv_wall_thickness <= 0 or self.rv_bulge <= 0:
            raise GeometryError("RV wall thickness and bulge must be positive")
        if self.rv_bulge < self.rv_wall_thickness + 0.2:
            raise GeometryError("rv_bulge must exceed rv_wall_thickness by >= 0.2 cm "
                                "so an RV cavity exists")
        if not (0.05 <= self.rv_ab_start <= 0.5):
            raise GeometryError("rv_ab_start must be in [0.05, 0.5]")
        if self.min_transmural_layers < 2:
            raise GeometryError("need at least 2 transmural layers")


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _meridian_theta(a: float, c: float, z_base: float, ab: np.ndarray) -> np.ndarray:
    """Polar angles on the ellipsoid meridian at normalized arc positions ab.

    theta = 0 is the apex (z = -c); the meridian ends where z = z_base.
    """
    theta_base = np.arccos(-z_base / c)
    grid = np.linspace(0.0, theta_base, 4001)
    speed = np.hypot(a * np.cos(grid), c * np.sin(grid))
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(grid))])
    arc /= arc[-1]
    return np.interp(ab, arc, grid)


def _meridian_arc_length(a: float, c: float, z_base: float) -> float:
    theta_base = np.arccos(-z_base / c)
    grid = np.linspace(0.0, theta_base, 4001)
    speed = np.hypot(a * np.cos(grid), c * np.sin(grid))
    return float(np.trapezoid(speed, grid))


_KUHN_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _kuhn_corner_paths():
    """Corner index tuples (delta_u, delta_v, delta_w) of the 6 Kuhn tets."""
    paths = []
    for perm in _KUHN_PERMS:
        corner = np.zeros(3, dtype=int)
        path = [tuple(corner)]
        for axis in perm:
            corner[axis] = 1
            path.append(tuple(corner))
        paths.append(path)
    return paths


def _split_cells(corner_ids) -> np.ndarray:
    """Kuhn-split a block of hex cells given as a dict {(du,dv,dw): id-array}.

    Collapsed tets (repeated node ids) are dropped.
    """
    tets = []
    for path in _kuhn_corner_paths():
        tets.append(np.stack([corner_ids[d].ravel() for d in path], axis=1))
    tets = np.concatenate(tets, axis=0)
    s = np.sort(tets, axis=1)
    keep = (s[:, 1:] != s[:, :-1]).all(axis=1)
    return tets[keep]


def generate_synthetic_biventricle(resolution: float = 0.2,
                                   params: GeometryParams | None = None) -> Mesh:
    """Build the synthetic biventricular mesh at a target edge length (cm)."""
    if params is None:
        params = GeometryParams()
    params.validate()
    if resolution <= 0:
        raise GeometryError("resolution must be positive")
    if resolution > params.lv_wall_thickness * 2:
        raise GeometryError(f"resolution {resolution} too coarse for wall thickness "
                            f"{params.lv_wall_thickness}")

    a_epi, c_epi = params.lv_outer_radius, params.lv_outer_height
    a_endo = a_epi - params.lv_wall_thickness
    c_endo = c_epi - params.lv_wall_thickness
    z_b = params.base_height
    tau = params.rv_wall_thickness

    # grid sizes
    nu = max(params.min_transmural_layers, int(round(params.lv_wall_thickness / resolution)))
    arc_mid = _meridian_arc_length(0.5 * (a_epi + a_endo), 0.5 * (c_epi + c_endo), z_b)
    nv = max(8, int(round(arc_mid / resolution)))
    circ = 2.0 * np.pi * (a_epi - 0.5 * params.lv_wall_thickness)
    nw = 3 * max(4, int(round(circ / resolution / 3.0)))
    mu = max(params.min_transmural_layers, int(round(tau / resolution)))
    ws = nw // 3                              # azimuthal cells under the septum band
    v0 = max(1, int(np.ceil(params.rv_ab_start * nv)))
    if v0 >= nv - 3:
        raise GeometryError("rv_ab_start leaves too few rows for the RV attachment")

    # ---------------- bowl nodes ----------------
    layer_stride = 1 + nv * nw

    def bowl_idx(u, v, w):
        # v == 0 collapses to the pole node of layer u
        u, v, w = np.asarray(u), np.asarray(v), np.asarray(w)
        ring = 1 + (v - 1) * nw + np.mod(w, nw)
        return u * layer_stride + np.where(v == 0, 0, ring)

    n_bowl = (nu + 1) * layer_stride
    pos = np.zeros((n_bowl, 3))
    tm = np.zeros(n_bowl)
    ab = np.zeros(n_bowl)
    rt = np.zeros(n_bowl)
    side = np.full(n_bowl, LV, dtype=np.uint8)

    ab_rows = np.arange(1, nv + 1) / nv
    phi = PHI0 + 2.0 * np.pi * np.arange(nw) / nw
    rt_cols = np.arange(nw) / nw
    for u in range(nu + 1):
        s = u / nu
        a = a_epi + s * (a_endo - a_epi)
        c = c_epi + s * (c_endo - c_epi)
        base = u * layer_stride
        pos[base] = (0.0, 0.0, -c)            # pole, ab = 0, rt = 0 by convention
        tm[base] = s
        theta = _meridian_theta(a, c, z_b, ab_rows)
        rho = a * np.sin(theta)
        z = -c * np.cos(theta)
        idx = base + 1 + np.arange(nv * nw).reshape(nv, nw)
        pos[idx, 0] = rho[:, None] * np.cos(phi)[None, :]
        pos[idx, 1] = rho[:, None] * np.sin(phi)[None, :]
        pos[idx, 2] = z[:, None]
        tm[idx] = s
        ab[idx] = ab_rows[:, None]
        rt[idx] = rt_cols[None, :]

    # ---------------- blister (RV free wall) ----------------
    nvb = nv - v0                             # footprint rows of cells
    vv = np.arange(v0, nv + 1)
    wwb = np.arange(0, ws + 1)
    xi_v = (vv - v0) / nvb
    xi_w = wwb / ws
    g_v = _smoothstep(xi_v / 0.35)
    g_w = _smoothstep(np.minimum(xi_w, 1.0 - xi_w) / 0.28)
    H = params.rv_bulge * g_v[:, None] * g_w[None, :]          # (nvb+1, ws+1)
    # the rings next to the pinched rim must stay in surface contact with the
    # bowl (a bare line contact would make the boundary non-manifold); at
    # fine resolutions the height ramp satisfies this on its own
    H[1, :] = np.minimum(H[1, :], tau)
    H[:, 1] = np.minimum(H[:, 1], tau)
    H[:, ws - 1] = np.minimum(H[:, ws - 1], tau)
    tau_eff = np.minimum(tau, H)
    hbase = H - tau_eff
    # cavity openness, tapered over several cells so the RV transmural
    # coordinate (and with it the fiber rule) blends into the LV epicardium
    q_open = (_smoothstep((xi_v - 0.11) / 0.45)[:, None]
              * _smoothstep((np.minimum(xi_w, 1.0 - xi_w) - 0.09) / 0.45)[None, :])
    q_open[H <= tau] = 0.0

    epi_ids = bowl_idx(0, vv[:, None], np.mod(wwb, nw)[None, :])
    b_pos = pos[epi_ids]                                        # (nvb+1, ws+1, 3)
    normal = b_pos / np.array([a_epi**2, a_epi**2, c_epi**2])
    normal /= np.linalg.norm(normal, axis=2, keepdims=True)
    horiz = b_pos.copy()
    horiz[:, :, 2] = 0.0
    horiz /= np.linalg.norm(horiz, axis=2, keepdims=True)
    mix = _smoothstep((xi_v - 0.6) / 0.4)
    d = (1.0 - mix[:, None, None]) * normal + mix[:, None, None] * horiz
    d /= np.linalg.norm(d, axis=2, keepdims=True)

    rt_rv = np.mod(1.0 - 2.0 * wwb / nw, 1.0)
    ab_rv = (vv / nv - v0 / nv) / (1.0 - v0 / nv)

    merged = np.zeros((mu + 1, nvb + 1, ws + 1), dtype=bool)
    merged[:, H <= 0.0] = True                 # pinched rim collapses onto the bowl
    merged[0, H <= tau] = True                 # contact band shares the bowl surface
    bl_ids = np.full((mu + 1, nvb + 1, ws + 1), -1, dtype=np.int64)
    bl_ids[merged] = np.broadcast_to(epi_ids, merged.shape)[merged]

    new_mask = ~merged
    n_new = int(new_mask.sum())
    bl_ids[new_mask] = n_bowl + np.arange(n_new)

    j_frac = (np.arange(mu + 1) / mu)[:, None, None]
    heights = hbase[None] + tau_eff[None] * j_frac
    bl_pos = b_pos[None] + heights[..., None] * d[None]
    new_pos = bl_pos[new_mask]
    if np.any(new_pos[:, 2] > z_b + 1e-9):
        raise GeometryError("RV free wall extends above the base plane; "
                            "reduce rv_bulge or base_height")

    pos = np.concatenate([pos, new_pos])
    # tm rises from 0 at the outer surface to the local openness at the inner
    # surface; level sets stay wall-parallel so the transmural gradient keeps
    # full strength wherever tm > 0
    tm = np.concatenate([tm, np.maximum(0.0, q_open[None] - j_frac)[new_mask].ravel()])
    ab = np.concatenate([ab, np.broadcast_to(ab_rv[None, :, None], new_mask.shape)[new_mask]])
    rt = np.concatenate([rt, np.broadcast_to(rt_rv[None, None, :], new_mask.shape)[new_mask]])
    side = np.concatenate([side, np.full(n_new, RV, dtype=np.uint8)])

    # ---------------- cells ----------------
    uu, vvs, wws = np.meshgrid(np.arange(nu), np.arange(nv), np.arange(nw), indexing="ij")
    bowl_corners = {(du, dv, dw): bowl_idx(uu + du, vvs + dv, wws + dw)
                    for du in (0, 1) for dv in (0, 1) for dw in (0, 1)}
    tets_bowl = _split_cells(bowl_corners)

    jj, vvb, wwc = np.meshgrid(np.arange(mu), np.arange(nvb), np.arange(ws), indexing="ij")
    bl_corners = {(dj, dv, dw): bl_ids[jj + dj, vvb + dv, wwc + dw]
                  for dj in (0, 1) for dv in (0, 1) for dw in (0, 1)}
    tets_bl = _split_cells(bl_corners)

    tets = np.concatenate([tets_bowl, tets_bl]).astype(np.int32)
    tets = orient_tets(pos, tets)

    # ---------------- surface tags ----------------
    n_total = pos.shape[0]
    tag = np.full(n_total, TAG_NONE, dtype=np.uint8)

    endo_base = nu * layer_stride
    tag[endo_base:endo_base + layer_stride] = TAG_LV_ENDO

    outer = np.zeros(n_total, dtype=bool)
    outer[:layer_stride] = True
    covered = np.zeros(n_total, dtype=bool)
    covered[epi_ids[H > 0.0]] = True
    floor_nodes = epi_ids[H > tau]
    tag[outer & ~covered] = TAG_EPI
    tag[floor_nodes] = TAG_RV_ENDO

    bl_epi = np.unique(bl_ids[mu][~merged[mu]])
    tag[bl_epi] = TAG_EPI
    roof = np.unique(bl_ids[0][~merged[0]])
    tag[roof] = TAG_RV_ENDO

    # base plane: top-row nodes not already on an endo/epi surface
    top_bowl = bowl_idx(np.arange(1, nu), nv, np.arange(nw)[:, None]).ravel()
    top_bl = np.unique(bl_ids[1:mu, nvb, :][~merged[1:mu, nvb, :]])
    for ids in (top_bowl, top_bl):
        sel = ids[tag[ids] == TAG_NONE]
        tag[sel] = TAG_BASE

    # anything else on the boundary bounds the RV cavity side walls
    bnodes = np.unique(boundary_faces_of(tets).ravel())
    untagged = bnodes[tag[bnodes] == TAG_NONE]
    tag[untagged] = TAG_RV_ENDO

    endo_layer = np.full(n_total, LAYER_NONE, dtype=np.uint8)
    is_endo = (tag == TAG_LV_ENDO) | (tag == TAG_RV_ENDO)
    endo_layer[is_endo & (ab <= DENSE_ENDO_AB_MAX)] = LAYER_DENSE
    endo_layer[is_endo & (ab > DENSE_ENDO_AB_MAX)] = LAYER_SPARSE

    mesh = Mesh(pos, tets, tm, ab, rt, side, tag, endo_layer)
    validate_mesh(mesh)
    return mesh


def analytic_wall_volume(params: GeometryParams | None = None) -> float:
    """Closed-form volume of the truncated LV shell (bowl part, cm^3)."""
    if params is None:
        params = GeometryParams()
    a_epi, c_epi = params.lv_outer_radius, params.lv_outer_height
    a_endo = a_epi - params.lv_wall_thickness
    c_endo = c_epi - params.lv_wall_thickness
    z = params.base_height

    def truncated(a, c):
        return np.pi * a * a * (z - z**3 / (3 * c * c) + 2.0 * c / 3.0)

    return float(truncated(a_epi, c_epi) - truncated(a_endo, c_endo))
