"""Experiment configuration: one declarative TOML file drives a full run.

Every physical constant (healthy conduction speeds, scar/border
reductions, fiber angles, electrode table, root sites) lives here as a
default, never buried in the simulation code.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, asdict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ecg import DEFAULT_ELECTRODES, ELECTRODE_NAMES
from .eikonal import RootNode, default_roots
from .geometry import CobivecoCoord
from .scenarios import DEFAULT_BASE_CV
from .synth import GeometryParams


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mesh_source: str = "synthetic"             # synthetic | file
    mesh_path: str | None = None
    resolution_cm: float = 0.2
    geometry: GeometryParams = field(default_factory=GeometryParams)

    base_cv: tuple = DEFAULT_BASE_CV           # fiber, sheet, normal, endo sparse, endo dense
    alpha_endo_deg: float = 60.0
    alpha_epi_deg: float = -60.0

    template_rest_mv: float = -85.0
    template_peak_mv: float = 30.0
    template_upstroke_ms: float = 1.0
    sample_period_ms: float = 1.0

    roots: list = field(default_factory=default_roots)
    electrodes: dict = field(default_factory=lambda: dict(DEFAULT_ELECTRODES))

    scenarios: list = field(default_factory=list)   # empty = full catalogue
    output_dir: str = "out"
    jobs: int = 1
    write_activation: bool = False

    def validate(self) -> None:
        if self.mesh_source not in ("synthetic", "file"):
            raise ConfigError(f"mesh.source must be synthetic or file, got {self.mesh_source!r}")
        if self.mesh_source == "file" and not self.mesh_path:
            raise ConfigError("mesh.source = file requires mesh.path")
        if self.resolution_cm <= 0:
            raise ConfigError("mesh.resolution_cm must be positive")
        if len(self.base_cv) != 5 or min(self.base_cv) <= 0:
            raise ConfigError("conduction speeds must be five positive values")
        if self.sample_period_ms <= 0:
            raise ConfigError("recording.sample_period_ms must be positive")
        if self.jobs < 1:
            raise ConfigError("run.jobs must be >= 1")
        if not self.roots:
            raise ConfigError("at least one root node is required")
        missing = [n for n in ELECTRODE_NAMES if n not in self.electrodes]
        if missing:
            raise ConfigError(f"missing electrodes: {missing}")
        self.geometry.validate()


def _root_from_table(i: int, entry: dict) -> RootNode:
    try:
        coord = CobivecoCoord(float(entry.get("tm", 1.0)), float(entry["ab"]),
                              float(entry["rt"]), str(entry.get("side", "LV")))
        return RootNode(name=str(entry.get("name", f"root_{i}")),
                        coord=coord, pk_delay=float(entry.get("delay_ms", 0.0)))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"roots[{i}]: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    mesh = data.get("mesh", {})
    cfg.mesh_source = mesh.get("source", cfg.mesh_source)
    cfg.mesh_path = mesh.get("path", cfg.mesh_path)
    cfg.resolution_cm = float(mesh.get("resolution_cm", cfg.resolution_cm))
    geo = mesh.get("geometry", {})
    if geo:
        defaults = GeometryParams()
        cfg.geometry = GeometryParams(
            lv_outer_radius=float(geo.get("lv_outer_radius_cm", defaults.lv_outer_radius)),
            lv_outer_height=float(geo.get("lv_outer_height_cm", defaults.lv_outer_height)),
            lv_wall_thickness=float(geo.get("lv_wall_thickness_cm", defaults.lv_wall_thickness)),
            base_height=float(geo.get("base_height_cm", defaults.base_height)),
            rv_wall_thickness=float(geo.get("rv_wall_thickness_cm", defaults.rv_wall_thickness)),
            rv_bulge=float(geo.get("rv_bulge_cm", defaults.rv_bulge)),
            rv_ab_start=float(geo.get("rv_ab_start", defaults.rv_ab_start)),
            min_transmural_layers=int(geo.get("min_transmural_layers",
                                              defaults.min_transmural_layers)),
        )
    cond = data.get("conduction", {})
    if cond:
        cfg.base_cv = (float(cond.get("fiber_cm_s", DEFAULT_BASE_CV[0])),
                       float(cond.get("sheet_cm_s", DEFAULT_BASE_CV[1])),
                       float(cond.get("normal_cm_s", DEFAULT_BASE_CV[2])),
                       float(cond.get("endo_sparse_cm_s", DEFAULT_BASE_CV[3])),
                       float(cond.get("endo_dense_cm_s", DEFAULT_BASE_CV[4])))
    fib = data.get("fibers", {})
    cfg.alpha_endo_deg = float(fib.get("alpha_endo_deg", cfg.alpha_endo_deg))
    cfg.alpha_epi_deg = float(fib.get("alpha_epi_deg", cfg.alpha_epi_deg))
    tpl = data.get("template", {})
    cfg.template_rest_mv = float(tpl.get("rest_mv", cfg.template_rest_mv))
    cfg.template_peak_mv = float(tpl.get("peak_mv", cfg.template_peak_mv))
    cfg.template_upstroke_ms = float(tpl.get("upstroke_ms", cfg.template_upstroke_ms))
    rec = data.get("recording", {})
    cfg.sample_period_ms = float(rec.get("sample_period_ms", cfg.sample_period_ms))
    if "roots" in data:
        cfg.roots = [_root_from_table(i, entry) for i, entry in enumerate(data["roots"])]
    if "electrodes" in data:
        cfg.electrodes = {str(k): tuple(float(x) for x in v)
                          for k, v in data["electrodes"].items()}
    run = data.get("run", {})
    cfg.scenarios = [str(s) for s in run.get("scenarios", [])]
    cfg.output_dir = str(run.get("output_dir", cfg.output_dir))
    cfg.jobs = int(run.get("jobs", cfg.jobs))
    cfg.write_activation = bool(run.get("write_activation", cfg.write_activation))
    cfg.validate()
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-dict form of a config (inverse of config_from_dict)."""
    out = {
        "mesh": {"source": cfg.mesh_source, "resolution_cm": cfg.resolution_cm,
                 "geometry": {
                     "lv_outer_radius_cm": cfg.geometry.lv_outer_radius,
                     "lv_outer_height_cm": cfg.geometry.lv_outer_height,
                     "lv_wall_thickness_cm": cfg.geometry.lv_wall_thickness,
                     "base_height_cm": cfg.geometry.base_height,
                     "rv_wall_thickness_cm": cfg.geometry.rv_wall_thickness,
                     "rv_bulge_cm": cfg.geometry.rv_bulge,
                     "rv_ab_start": cfg.geometry.rv_ab_start,
                     "min_transmural_layers": cfg.geometry.min_transmural_layers,
                 }},
        "conduction": {"fiber_cm_s": cfg.base_cv[0], "sheet_cm_s": cfg.base_cv[1],
                       "normal_cm_s": cfg.base_cv[2], "endo_sparse_cm_s": cfg.base_cv[3],
                       "endo_dense_cm_s": cfg.base_cv[4]},
        "fibers": {"alpha_endo_deg": cfg.alpha_endo_deg, "alpha_epi_deg": cfg.alpha_epi_deg},
        "template": {"rest_mv": cfg.template_rest_mv, "peak_mv": cfg.template_peak_mv,
                     "upstroke_ms": cfg.template_upstroke_ms},
        "recording": {"sample_period_ms": cfg.sample_period_ms},
        "roots": [{"name": r.name, "side": r.coord.side, "tm": r.coord.tm,
                   "ab": r.coord.ab, "rt": r.coord.rt, "delay_ms": r.pk_delay}
                  for r in cfg.roots],
        "electrodes": {k: list(v) for k, v in cfg.electrodes.items()},
        "run": {"scenarios": list(cfg.scenarios), "output_dir": cfg.output_dir,
                "jobs": cfg.jobs, "write_activation": cfg.write_activation},
    }
    if cfg.mesh_path:
        out["mesh"]["path"] = cfg.mesh_path
    return out


def default_config_toml() -> str:
    """The default configuration rendered as a commented TOML document."""
    cfg = ExperimentConfig()
    g = cfg.geometry
    lines = [
        "# qrsim experiment configuration (all values shown are the defaults)",
        "",
        "[mesh]",
        'source = "synthetic"          # synthetic | file',
        f"resolution_cm = {cfg.resolution_cm}",
        '# path = "mesh.txt"           # mesh file when source = "file"',
        "",
        "[mesh.geometry]",
        f"lv_outer_radius_cm = {g.lv_outer_radius}",
        f"lv_outer_height_cm = {g.lv_outer_height}",
        f"lv_wall_thickness_cm = {g.lv_wall_thickness}",
        f"base_height_cm = {g.base_height}",
        f"rv_wall_thickness_cm = {g.rv_wall_thickness}",
        f"rv_bulge_cm = {g.rv_bulge}",
        f"rv_ab_start = {g.rv_ab_start}",
        "",
        "[conduction]                  # healthy myocardium speeds, cm/s",
        f"fiber_cm_s = {cfg.base_cv[0]}",
        f"sheet_cm_s = {cfg.base_cv[1]}",
        f"normal_cm_s = {cfg.base_cv[2]}",
        f"endo_sparse_cm_s = {cfg.base_cv[3]}",
        f"endo_dense_cm_s = {cfg.base_cv[4]}",
        "",
        "[fibers]",
        f"alpha_endo_deg = {cfg.alpha_endo_deg}",
        f"alpha_epi_deg = {cfg.alpha_epi_deg}",
        "",
        "[template]                    # transmembrane upstroke shape",
        f"rest_mv = {cfg.template_rest_mv}",
        f"peak_mv = {cfg.template_peak_mv}",
        f"upstroke_ms = {cfg.template_upstroke_ms}",
        "",
        "[recording]",
        f"sample_period_ms = {cfg.sample_period_ms}",
        "",
    ]
    for r in cfg.roots:
        lines += ["[[roots]]",
                  f'name = "{r.name}"',
                  f'side = "{r.coord.side}"',
                  f"tm = {r.coord.tm}",
                  f"ab = {r.coord.ab:.6g}",
                  f"rt = {r.coord.rt:.6g}",
                  f"delay_ms = {r.pk_delay}",
                  ""]
    lines.append("[electrodes]                  # cm, mesh frame")
    for name in ELECTRODE_NAMES:
        x, y, z = cfg.electrodes[name]
        lines.append(f"{name} = [{x}, {y}, {z}]")
    lines += [
        "",
        "[run]",
        "scenarios = []                # empty selects the full 18-entry catalogue",
        f'output_dir = "{cfg.output_dir}"',
        f"jobs = {cfg.jobs}",
        "write_activation = false",
        "",
    ]
    return "\n".join(lines)
