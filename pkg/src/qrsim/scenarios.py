"""Infarct scenario catalogue and conduction velocity fields.

Scar and border zones are ellipsoids in wall coordinates: a point belongs
to the core when

    ((tm - tm0)/tm_r)^2 + ((ab - ab0)/ab_r)^2 + (d(rt, rt0)/rt_r)^2 <= 1

with modular rt distance, and to the border when the same form with radii
scaled by ``border_scale`` holds.  All catalogue infarcts live in the left
ventricle; RV-side coordinates are always outside.

The catalogue holds 18 scenarios: 7 locations x {transmural,
subendocardial} = 14, a small-size lateral pair, a lateral alternative-CV
variant, and the healthy baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import LAYER_DENSE, LAYER_NONE, LV, CobivecoCoord, Mesh, rt_distance

ZONE_HEALTHY = 0
ZONE_BORDER = 1
ZONE_CORE = 2
ZONE_NAMES = {ZONE_HEALTHY: "healthy", ZONE_BORDER: "border", ZONE_CORE: "scar"}

DEFAULT_BORDER_SCALE = 1.3
DEFAULT_CV_REDUCTION = (0.10, 0.50)
ALT_CV_REDUCTION = (0.05, 0.25)

#: healthy speeds: fiber, sheet, sheet-normal, endo sparse, endo dense (cm/s)
DEFAULT_BASE_CV = (65.0, 48.0, 51.0, 100.0, 150.0)

# transmural scars span the full wall, subendocardial ones the inner half
TRANSMURAL_TM = (0.5, 0.55)
SUBENDO_TM = (1.0, 0.5)


@dataclass(frozen=True)
class InfarctRegion:
    """Ellipsoidal region in wall coordinates (center, radii, border scale)."""

    center: tuple[float, float, float]        # (tm0, ab0, rt0)
    radii: tuple[float, float, float]         # (tm_r, ab_r, rt_r)
    border_scale: float = DEFAULT_BORDER_SCALE

    def __post_init__(self):
        if min(self.radii) <= 0:
            raise ValueError(f"region radii must be positive, got {self.radii}")
        if self.border_scale < 1.0:
            raise ValueError(f"border_scale must be >= 1, got {self.border_scale}")

    def quadratic_form(self, tm, ab, rt) -> np.ndarray:
        tm0, ab0, rt0 = self.center
        tr, ar, rr = self.radii
        return (((np.asarray(tm) - tm0) / tr) ** 2
                + ((np.asarray(ab) - ab0) / ar) ** 2
                + (rt_distance(rt, rt0) / rr) ** 2)


def in_region(c: CobivecoCoord, region: InfarctRegion) -> str:
    """Classify a coordinate as 'core', 'border' or 'outside'."""
    if c.side != "LV":
        return "outside"
    q = float(region.quadratic_form(c.tm, c.ab, c.rt))
    if q <= 1.0:
        return "core"
    s = region.border_scale
    tm0, ab0, rt0 = region.center
    tr, ar, rr = region.radii
    qb = (((c.tm - tm0) / (s * tr)) ** 2 + ((c.ab - ab0) / (s * ar)) ** 2
          + (float(rt_distance(c.rt, rt0)) / (s * rr)) ** 2)
    return "border" if qb <= 1.0 else "outside"


@dataclass(frozen=True)
class ScenarioSpec:
    """A named infarct scenario: regions plus scar/border CV fractions."""

    name: str
    regions: tuple[InfarctRegion, ...]
    cv_reduction: tuple[float, float] = DEFAULT_CV_REDUCTION   # (scar, border)
    location: str = ""
    extent: str = ""

    def __post_init__(self):
        scar, border = self.cv_reduction
        if not (0.0 < scar <= border <= 1.0):
            raise ValueError(f"{self.name}: need 0 < scar <= border <= 1, "
                             f"got {self.cv_reduction}")

    @property
    def is_baseline(self) -> bool:
        return not self.regions


# (ab0, ab_r, rt0, rt_r) of each location's default-size footprint, chosen so
# sampled core points stay inside the location's AHA territory
_LOCATIONS = {
    "septal":        (0.50, 0.28, 1.0 / 6.0 - 0.007, 0.085),
    "apical":        (0.12, 0.22, 0.0, 0.60),
    "ext_anterior":  (0.45, 0.48, 1.0 / 3.0, 0.13),
    "lim_anterior":  (0.55, 0.24, 5.0 / 12.0, 0.075),
    "lateral":       (0.50, 0.25, 2.0 / 3.0, 0.09),
    "inferior":      (0.45, 0.27, 11.0 / 12.0, 0.075),
    "inferolateral": (0.45, 0.27, 0.80, 0.11),
}

#: AHA segments making up each location's territory
TERRITORY_SEGMENTS = {
    "septal": {2, 3, 8, 9, 14},
    "apical": {13, 14, 15, 16, 17},
    "ext_anterior": {1, 2, 7, 8, 13, 14, 17},
    "lim_anterior": {1, 7, 13},
    "lateral": {5, 6, 11, 12, 16},
    "inferior": {4, 10, 15},
    "inferolateral": {4, 5, 10, 11, 15, 16},
}

SMALL_SIZE_FACTOR = 0.6
EXTENTS = {"transmural": TRANSMURAL_TM, "subendocardial": SUBENDO_TM}


def _region(location: str, extent: str, size: float = 1.0) -> InfarctRegion:
    ab0, ab_r, rt0, rt_r = _LOCATIONS[location]
    tm0, tm_r = EXTENTS[extent]
    return InfarctRegion(center=(tm0, ab0, rt0),
                         radii=(tm_r, size * ab_r, size * rt_r))


def catalogue() -> list[ScenarioSpec]:
    """The 17 infarct scenarios plus the healthy baseline, in run order."""
    specs = [ScenarioSpec(name="baseline", regions=())]
    for location in _LOCATIONS:
        for extent in EXTENTS:
            specs.append(ScenarioSpec(
                name=f"{location}_{extent}",
                regions=(_region(location, extent),),
                location=location, extent=extent))
    for extent in EXTENTS:
        specs.append(ScenarioSpec(
            name=f"lateral_small_{extent}",
            regions=(_region("lateral", extent, size=SMALL_SIZE_FACTOR),),
            location="lateral", extent=extent))
    specs.append(ScenarioSpec(
        name="lateral_altcv_transmural",
        regions=(_region("lateral", "transmural"),),
        cv_reduction=ALT_CV_REDUCTION,
        location="lateral", extent="transmural"))
    return specs


def get_scenario(name: str) -> ScenarioSpec:
    for spec in catalogue():
        if spec.name == name:
            return spec
    raise KeyError(f"unknown scenario {name!r}")


@dataclass
class CVField:
    """Per-element conduction speeds, fiber frames and per-node endocardial
    overrides (cm/s)."""

    v_f: np.ndarray
    v_s: np.ndarray
    v_n: np.ndarray
    frames: np.ndarray              # per element (m, 3, 3): fiber, sheet, normal rows
    endo_speed: np.ndarray          # per node, 0 where endo_layer == none
    elem_zone: np.ndarray           # per element, ZONE_*
    node_zone: np.ndarray           # per node, ZONE_*
    spec: ScenarioSpec = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("v_f", "v_s", "v_n", "frames", "endo_speed"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            setattr(self, name, arr)
        if (self.v_f <= 0).any() or (self.v_s <= 0).any() or (self.v_n <= 0).any():
            raise ValueError("all conduction speeds must be positive")


def _classify(spec: ScenarioSpec, tm, ab, rt, side) -> np.ndarray:
    zone = np.zeros(np.shape(tm), dtype=np.uint8)
    if spec.is_baseline:
        return zone
    lv = np.asarray(side) == LV
    border = np.zeros_like(lv)
    core = np.zeros_like(lv)
    for region in spec.regions:
        q = region.quadratic_form(tm, ab, rt)
        core |= lv & (q <= 1.0)
        s = region.border_scale ** 2
        border |= lv & (q <= s)       # radii scaled by border_scale <=> q <= scale^2
    zone[border] = ZONE_BORDER
    zone[core] = ZONE_CORE
    return zone


def build_cv_field(mesh: Mesh, fibers: np.ndarray, spec: ScenarioSpec,
                   base_cv: tuple[float, float, float, float, float] = DEFAULT_BASE_CV) -> CVField:
    """Conduction speeds for a scenario: zone-scaled tensor speeds per element
    (decided at the centroid coordinate) and endocardial layer speeds per node.
    """
    vf0, vs0, vn0, v_sparse, v_dense = base_cv
    if min(base_cv) <= 0:
        raise ValueError(f"base speeds must be positive, got {base_cv}")
    if fibers.shape != (mesh.num_tets, 3, 3):
        raise ValueError(f"fiber frame array has shape {fibers.shape}, "
                         f"expected ({mesh.num_tets}, 3, 3)")
    tm_e, ab_e, rt_e, side_e = mesh.element_coords()
    elem_zone = _classify(spec, tm_e, ab_e, rt_e, side_e)
    node_zone = _classify(spec, mesh.tm, mesh.ab, mesh.rt, mesh.side)

    scar, border = spec.cv_reduction
    factor = np.choose(elem_zone, [1.0, border, scar])
    endo_factor = np.choose(node_zone, [1.0, border, scar])

    endo_base = np.where(mesh.endo_layer == LAYER_NONE, 0.0,
                         np.where(mesh.endo_layer == LAYER_DENSE, v_dense, v_sparse))
    return CVField(v_f=vf0 * factor, v_s=vs0 * factor, v_n=vn0 * factor,
                   frames=fibers, endo_speed=endo_base * endo_factor,
                   elem_zone=elem_zone, node_zone=node_zone, spec=spec)


def sample_region_coords(region: InfarctRegion, n: int = 500,
                         seed: int = 7) -> list[CobivecoCoord]:
    """Deterministic rejection sample of core points, for territory checks."""
    rng = np.random.default_rng(seed)
    tm0, ab0, rt0 = region.center
    out: list[CobivecoCoord] = []
    while len(out) < n:
        tm = tm0 + region.radii[0] * rng.uniform(-1, 1, 4 * n)
        ab = ab0 + region.radii[1] * rng.uniform(-1, 1, 4 * n)
        rt = np.mod(rt0 + region.radii[2] * rng.uniform(-1, 1, 4 * n), 1.0)
        keep = ((region.quadratic_form(tm, ab, rt) <= 1.0)
                & (tm >= 0) & (tm <= 1) & (ab >= 0) & (ab <= 1))
        for t, a, r in zip(tm[keep], ab[keep], rt[keep]):
            out.append(CobivecoCoord(float(t), float(a), float(r), "LV"))
            if len(out) == n:
                break
    return out


def catalogue_report() -> str:
    """Human-readable catalogue listing (name, centers, radii, reductions)."""
    lines = ["scenario catalogue (18 entries)", ""]
    for spec in catalogue():
        scar, border = spec.cv_reduction
        lines.append(f"{spec.name}")
        lines.append(f"  cv_reduction: scar={scar:.2f} border={border:.2f}")
        if spec.is_baseline:
            lines.append("  regions: none (healthy)")
        for r in spec.regions:
            lines.append(f"  region: center(tm,ab,rt)=({r.center[0]:.3f}, {r.center[1]:.3f}, "
                         f"{r.center[2]:.3f}) radii=({r.radii[0]:.3f}, {r.radii[1]:.3f}, "
                         f"{r.radii[2]:.3f}) border_scale={r.border_scale:.2f}")
        if spec.location:
            segs = sorted(TERRITORY_SEGMENTS[spec.location])
            lines.append(f"  territory segments: {segs}")
        lines.append("")
    return "\n".join(lines)
