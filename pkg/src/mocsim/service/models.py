"""Request/response schemas of the simulation service."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..ensembles import Family
from ..experiment import FitOptions, RunConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    config: RunConfig


class WeightedGraphPayload(BaseModel):
    measure: str
    sum_measure: float
    count: int
    horizontal_csv: Optional[str] = None
    vertical_csv: Optional[str] = None


class RunResponse(BaseModel):
    tally_csv: str
    fit_report: Optional[dict] = None
    weighted_graph: Optional[WeightedGraphPayload] = None
    meta: dict


class FitRequest(BaseModel):
    tally_csv: str
    family: Family
    num_sites: int = Field(ge=1)
    prob: float = Field(default=0.5, ge=0.0, le=1.0)
    iterations: Optional[int] = None
    fit: FitOptions = FitOptions()


class FitResponse(BaseModel):
    report: dict


class AngleAverageRequest(BaseModel):
    tally_csv: str
    num_sites: int = Field(ge=4)
    k: int = Field(ge=2, le=4)
    radius_sq: float
    eta_values: list[float]
    num_angles: int = 64
    measure: str = "gme"


class AngleAveragePoint(BaseModel):
    eta: float
    rate: float
    stderr: float


class AngleAverageResponse(BaseModel):
    points: list[AngleAveragePoint]
    excluded_etas: list[float]


class OracleCheckRequest(BaseModel):
    families: list[Family] = [Family.MOC1D, Family.MOC2D]
    trials: int = Field(default=100, ge=1)
    max_sites: int = Field(default=8, ge=2)
    max_depth: int = Field(default=8, ge=1)
    probs: list[float] = [0.1, 0.5, 0.9]
    seed: int = 0
    include_floodfill: bool = True


class OracleCheckResponse(BaseModel):
    tableau: dict
    floodfill: Optional[dict] = None
    passed: bool
