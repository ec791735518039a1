"""End-to-end experiment orchestration.

One run: resolve the mesh, assign fibers, simulate the baseline first
(which fixes the normalization and the mm calibration), then every
selected infarct scenario, and derive features, dissimilarities, CSV
tables and SVG plots.  Scenario failures are recorded in the report
without aborting the sweep; reruns with the same config are
byte-identical regardless of the worker count.
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import svgplot
from .config import ExperimentConfig
from .ecg import (ELECTRODE_NAMES, LEAD_NAMES, ElectrodeSet, QRSRecording,
                  TransmembraneTemplate, simulate_qrs)
from .eikonal import solve
from .fibers import assign_fibers
from .meshfile import load_mesh
from .qrs import (FQRS_LEAD_GROUPS, DissimilarityReport, QRSFeatures,
                  dissimilarity_report, extract_features)
from .scenarios import build_cv_field, catalogue
from .synth import generate_synthetic_biventricle


class ExperimentError(RuntimeError):
    pass


@dataclass
class ScenarioResult:
    name: str
    status: str = "ok"                       # ok | error
    error: str = ""
    activation: dict = field(default_factory=dict)
    activation_map: object = None            # ActivationMap, kept for analysis
    recording: QRSRecording | None = None
    features: QRSFeatures | None = None
    qrs_csv: str = ""


@dataclass
class ExperimentReport:
    mesh_nodes: int
    mesh_tets: int
    entries: list                            # ScenarioResult, baseline first
    dissimilarity: DissimilarityReport | None
    output_dir: str
    files: list = field(default_factory=list)
    mesh: object = None                      # Mesh, kept for analysis

    def entry(self, name: str) -> ScenarioResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        out = {"mesh": {"nodes": self.mesh_nodes, "tets": self.mesh_tets},
               "output_dir": self.output_dir, "files": list(self.files),
               "entries": []}
        for e in self.entries:
            item = {"name": e.name, "status": e.status, "error": e.error,
                    "activation": e.activation, "qrs_csv": e.qrs_csv}
            if e.features is not None:
                item["features"] = _features_dict(e.features)
            if (self.dissimilarity is not None and e.name != "baseline"
                    and e.status == "ok" and e.name in self.dissimilarity.names):
                item["dtw"] = self.dissimilarity.row(e.name)
            out["entries"].append(item)
        if self.dissimilarity is not None:
            out["pairwise"] = {"names": self.dissimilarity.pairwise_names,
                               "matrix": self.dissimilarity.pairwise.tolist()}
        return out


def _features_dict(f: QRSFeatures) -> dict:
    return {
        "duration_ms": f.duration,
        "pathological_q": f.pathological_q,
        "prwp": f.prwp,
        "fqrs_flags": dict(f.fqrs_flags),
        "leads": {name: {"onset_ms": lf.onset, "offset_ms": lf.offset,
                         "duration_ms": lf.duration, "q_amp": lf.q_amp,
                         "q_duration_ms": lf.q_duration, "r_amp": lf.r_amp,
                         "r_time_ms": None if np.isnan(lf.r_time) else lf.r_time,
                         "s_amp": lf.s_amp,
                         "fqrs_count": lf.fqrs_count,
                         "pathological_q": lf.pathological_q}
                  for name, lf in f.leads.items()},
    }


def _resolve_mesh(cfg: ExperimentConfig):
    if cfg.mesh_source == "file":
        return load_mesh(cfg.mesh_path)
    return generate_synthetic_biventricle(cfg.resolution_cm, cfg.geometry)


def _select_scenarios(cfg: ExperimentConfig):
    specs = catalogue()
    if not cfg.scenarios:
        return specs
    known = {s.name: s for s in specs}
    unknown = [n for n in cfg.scenarios if n not in known]
    if unknown:
        raise ExperimentError(f"unknown scenarios: {unknown}")
    # catalogue order, baseline always included
    chosen = [s for s in specs if s.name in cfg.scenarios or s.name == "baseline"]
    return chosen

def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg.validate()
    specs = _select_scenarios(cfg)
    mesh = _resolve_mesh(cfg)
    frames = assign_fibers(mesh, cfg.alpha_endo_deg, cfg.alpha_epi_deg)
    template = TransmembraneTemplate(cfg.template_rest_mv, cfg.template_peak_mv,
                                     cfg.template_upstroke_ms)
    electrodes = ElectrodeSet({k: tuple(v) for k, v in cfg.electrodes.items()})

    baseline_spec = next(s for s in specs if s.name == "baseline")
    base = _run_scenario(mesh, frames, baseline_spec, cfg, template, electrodes,
                         scale=None, gain_mm=None)
    if base.status != "ok":
        raise ExperimentError(f"baseline run failed: {base.error}")
    scale, gain_mm = base.recording.scale, base.recording.gain_mm

    others = [s for s in specs if s.name != "baseline"]

    def job(spec):
        return _run_scenario(mesh, frames, spec, cfg, template, electrodes,
                             scale=scale, gain_mm=gain_mm)

    if cfg.jobs > 1 and others:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(job, others))
    else:
        results = [job(s) for s in others]
    entries = [base] + results

    ok_recs = {e.name: e.recording for e in results if e.status == "ok"}
    dis = dissimilarity_report(base.recording, ok_recs)
    report = ExperimentReport(mesh_nodes=mesh.num_nodes, mesh_tets=mesh.num_tets,
                              entries=entries, dissimilarity=dis,
                              output_dir=cfg.output_dir, mesh=mesh)
    _write_outputs(report, cfg)
    return report


def _run_scenario(mesh, frames, spec, cfg, template, electrodes, scale, gain_mm):
    result = ScenarioResult(name=spec.name)
    try:
        cv = build_cv_field(mesh, frames, spec, cfg.base_cv)
        act = solve(mesh, cv, cfg.roots)
        rec = simulate_qrs(mesh, act, template, electrodes,
                           sample_period=cfg.sample_period_ms,
                           scale=scale, gain_mm=gain_mm)
        result.activation = act.summary()
        result.activation_map = act
        result.recording = rec
        result.features = extract_features(rec)
        if cfg.write_activation:
            path = os.path.join(cfg.output_dir, f"activation_{spec.name}.txt")
            os.makedirs(cfg.output_dir, exist_ok=True)
            act.save(path)
    except Exception as exc:  # failure isolation: one bad scenario never kills the sweep
        result.status = "error"
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def _write_outputs(report: ExperimentReport, cfg: ExperimentConfig) -> None:
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    files = []

    def write(name: str, text: str):
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        files.append(name)

    dis = report.dissimilarity
    rows = ["scenario," + ",".join(LEAD_NAMES) + ",dtw_max,dtw_avg"]
    for i, name in enumerate(dis.names):
        rows.append(name + "," + ",".join(f"{v:.6f}" for v in dis.per_lead[i])
                    + f",{dis.dtw_max[i]:.6f},{dis.dtw_avg[i]:.6f}")
    write("dissimilarity.csv", "\n".join(rows) + "\n")

    rows = ["name," + ",".join(dis.pairwise_names)]
    for i, name in enumerate(dis.pairwise_names):
        rows.append(name + "," + ",".join(f"{v:.6f}" for v in dis.pairwise[i]))
    write("pairwise.csv", "\n".join(rows) + "\n")

    header = ("scenario,lead,onset_ms,offset_ms,duration_ms,q_amp,q_duration_ms,"
              "r_amp,r_time_ms,s_amp,fqrs_count,pathological_q,"
              "fqrs_inferior,fqrs_anterior,fqrs_lateral,prwp")
    rows = [header]
    for e in report.entries:
        if e.status != "ok":
            rows.append(f"{e.name},error,,,,,,,,,,,,,,")
            continue
        f = e.features
        for lead in LEAD_NAMES:
            lf = f.leads[lead]
            rows.append(f"{e.name},{lead},{lf.onset:.6f},{lf.offset:.6f},"
                        f"{lf.duration:.6f},{lf.q_amp:.6f},{lf.q_duration:.6f},"
                        f"{lf.r_amp:.6f},{lf.r_time:.6f},{lf.s_amp:.6f},"
                        f"{lf.fqrs_count},{str(lf.pathological_q).lower()},,,,")
        flags = ",".join(str(f.fqrs_flags[g]).lower() for g in FQRS_LEAD_GROUPS)
        rows.append(f"{e.name},summary,,,{f.duration:.6f},,,,,,,"
                    f"{str(f.pathological_q).lower()},{flags},{str(f.prwp).lower()}")
    write("features.csv", "\n".join(rows) + "\n")

    for e in report.entries:
        if e.status == "ok":
            name = f"qrs_{e.name}.csv"
            write(name, e.recording.to_csv())
            e.qrs_csv = name
        if cfg.write_activation and e.status == "ok":
            files.append(f"activation_{e.name}.txt")

    emit_plots(report, outdir, files)
    report_dict = report.to_json_dict()
    report_dict.pop("output_dir")          # keep the file itself path-free
    write("report.json", json.dumps(report_dict, indent=2, sort_keys=True) + "\n")
    report.files = files


def emit_plots(report: ExperimentReport, outdir: str, files: list | None = None) -> list:
    """Heatmap, pairwise matrix and per-scenario trace overlay SVGs."""
    os.makedirs(outdir, exist_ok=True)
    files = files if files is not None else []
    dis = report.dissimilarity
    if dis is None or not dis.names:
        warnings.warn("no scenarios beyond baseline: skipping heatmap/pairwise SVGs")
    else:
        def write(name, text):
            with open(os.path.join(outdir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            files.append(name)

        write("heatmap.svg", svgplot.heatmap_svg(
            dis.names, list(LEAD_NAMES), dis.per_lead,
            "per-lead QRS dissimilarity (DTW) vs baseline"))
        write("pairwise.svg", svgplot.heatmap_svg(
            dis.pairwise_names, dis.pairwise_names, dis.pairwise,
            "pairwise QRS dissimilarity (mean DTW over leads)"))
        base = report.entry("baseline")
        for e in report.entries:
            if e.name == "baseline" or e.status != "ok":
                continue
            write(f"qrs_{e.name}.svg", svgplot.traces_svg(
                base.recording.leads, e.recording.leads,
                e.recording.sample_period, f"{e.name} (red) vs baseline (grey)"))
    return files
