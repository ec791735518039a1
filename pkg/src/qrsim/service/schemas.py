"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import ExperimentConfig, config_from_dict, config_to_dict


class GeometryModel(BaseModel):
    lv_outer_radius_cm: float = 2.8
    lv_outer_height_cm: float = 4.8
    lv_wall_thickness_cm: float = 1.0
    base_height_cm: float = 1.1
    rv_wall_thickness_cm: float = 0.45
    rv_bulge_cm: float = 1.7
    rv_ab_start: float = 0.18
    min_transmural_layers: int = 5


class MeshModel(BaseModel):
    source: str = "synthetic"
    path: str | None = None
    resolution_cm: float = 0.2
    geometry: GeometryModel = Field(default_factory=GeometryModel)


class ConductionModel(BaseModel):
    fiber_cm_s: float = 65.0
    sheet_cm_s: float = 48.0
    normal_cm_s: float = 51.0
    endo_sparse_cm_s: float = 100.0
    endo_dense_cm_s: float = 150.0


class FibersModel(BaseModel):
    alpha_endo_deg: float = 60.0
    alpha_epi_deg: float = -60.0


class TemplateModel(BaseModel):
    rest_mv: float = -85.0
    peak_mv: float = 30.0
    upstroke_ms: float = 1.0


class RecordingModel(BaseModel):
    sample_period_ms: float = 1.0


class RootModel(BaseModel):
    name: str
    side: str = "LV"
    tm: float = 1.0
    ab: float
    rt: float
    delay_ms: float = 0.0


class RunModel(BaseModel):
    scenarios: list[str] = Field(default_factory=list)
    output_dir: str = "out"
    jobs: int = 1
    write_activation: bool = False


class ConfigModel(BaseModel):
    """Mirrors the TOML configuration document."""

    mesh: MeshModel = Field(default_factory=MeshModel)
    conduction: ConductionModel = Field(default_factory=ConductionModel)
    fibers: FibersModel = Field(default_factory=FibersModel)
    template: TemplateModel = Field(default_factory=TemplateModel)
    recording: RecordingModel = Field(default_factory=RecordingModel)
    roots: list[RootModel] | None = None
    electrodes: dict[str, tuple[float, float, float]] | None = None
    run: RunModel = Field(default_factory=RunModel)

    def to_experiment_config(self) -> ExperimentConfig:
        data = self.model_dump(exclude_none=True)
        mesh = data.get("mesh", {})
        if mesh.get("source") == "synthetic":
            mesh.pop("path", None)
        return config_from_dict(data)

    @classmethod
    def from_experiment_config(cls, cfg: ExperimentConfig) -> "ConfigModel":
        return cls.model_validate(config_to_dict(cfg))


class RegionModel(BaseModel):
    center: tuple[float, float, float]
    radii: tuple[float, float, float]
    border_scale: float


class ScenarioModel(BaseModel):
    name: str
    location: str
    extent: str
    cv_reduction: tuple[float, float]
    regions: list[RegionModel]
    territory_segments: list[int] = Field(default_factory=list)


class CatalogueResponse(BaseModel):
    scenarios: list[ScenarioModel]


class MeshGenerateRequest(BaseModel):
    resolution_cm: float = 0.2
    geometry: GeometryModel = Field(default_factory=GeometryModel)


class SimulateRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    scenarios: list[str] | None = None        # overrides config.run.scenarios
    output_dir: str | None = None
    jobs: int | None = None


class DtwRow(BaseModel):
    per_lead: dict[str, float]
    dtw_max: float
    dtw_avg: float


class EntryModel(BaseModel):
    name: str
    status: str
    error: str = ""
    activation: dict[str, float] = Field(default_factory=dict)
    qrs_csv: str = ""
    features: dict | None = None
    dtw: DtwRow | None = None


class PairwiseModel(BaseModel):
    names: list[str]
    matrix: list[list[float]]


class SimulateResponse(BaseModel):
    mesh: dict[str, int]
    output_dir: str
    files: list[str]
    entries: list[EntryModel]
    pairwise: PairwiseModel | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
