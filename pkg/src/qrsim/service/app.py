"""FastAPI service wrapping the simulation package.

Endpoints:

* ``GET  /health``        liveness and version
* ``GET  /catalogue``     the 18-entry scenario catalogue
* ``POST /mesh/generate`` synthetic mesh as the text mesh format
* ``POST /simulate``      full experiment run; outputs written server-side

Errors return ``{"error": {"type": ..., "message": ...}}``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import __version__
from ..config import ConfigError
from ..eikonal import RootSnapError, SolveError
from ..ecg import ElectrodeError
from ..experiment import ExperimentError, run_experiment
from ..geometry import MeshError
from ..meshfile import dumps_mesh
from ..scenarios import TERRITORY_SEGMENTS, catalogue
from ..synth import GeometryError, GeometryParams, generate_synthetic_biventricle
from .schemas import (CatalogueResponse, HealthResponse, MeshGenerateRequest,
                      RegionModel, ScenarioModel, SimulateRequest,
                      SimulateResponse)

USER_ERRORS = (ConfigError, GeometryError, MeshError, ExperimentError,
               RootSnapError, ElectrodeError, ValueError, FileNotFoundError)


def create_app() -> FastAPI:
    app = FastAPI(title="qrsim", version=__version__,
                  description="Infarct scenario simulation and QRS sensitivity analysis")

    async def on_error(request: Request, exc: Exception):
        if isinstance(exc, SolveError):
            status = 422
        elif isinstance(exc, USER_ERRORS):
            status = 400
        else:
            status = 500
        return JSONResponse(status_code=status,
                            content={"error": {"type": type(exc).__name__,
                                               "message": str(exc)}})

    for exc_type in (ValueError, RuntimeError, FileNotFoundError):
        app.add_exception_handler(exc_type, on_error)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/catalogue", response_model=CatalogueResponse)
    def get_catalogue():
        out = []
        for spec in catalogue():
            out.append(ScenarioModel(
                name=spec.name, location=spec.location, extent=spec.extent,
                cv_reduction=spec.cv_reduction,
                regions=[RegionModel(center=r.center, radii=r.radii,
                                     border_scale=r.border_scale)
                         for r in spec.regions],
                territory_segments=sorted(TERRITORY_SEGMENTS.get(spec.location, ())),
            ))
        return CatalogueResponse(scenarios=out)

    @app.post("/mesh/generate", response_class=PlainTextResponse)
    def mesh_generate(req: MeshGenerateRequest):
        g = req.geometry
        params = GeometryParams(
            lv_outer_radius=g.lv_outer_radius_cm,
            lv_outer_height=g.lv_outer_height_cm,
            lv_wall_thickness=g.lv_wall_thickness_cm,
            base_height=g.base_height_cm,
            rv_wall_thickness=g.rv_wall_thickness_cm,
            rv_bulge=g.rv_bulge_cm,
            rv_ab_start=g.rv_ab_start,
            min_transmural_layers=g.min_transmural_layers,
        )
        mesh = generate_synthetic_biventricle(req.resolution_cm, params)
        return PlainTextResponse(dumps_mesh(mesh), media_type="text/plain")

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        cfg = req.config.to_experiment_config()
        if req.scenarios is not None:
            cfg.scenarios = list(req.scenarios)
        if req.output_dir is not None:
            cfg.output_dir = req.output_dir
        if req.jobs is not None:
            cfg.jobs = req.jobs
        cfg.validate()
        report = run_experiment(cfg)
        return SimulateResponse.model_validate(report.to_json_dict())

    return app
