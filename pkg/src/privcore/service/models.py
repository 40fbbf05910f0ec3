"""Request/response models shared by the HTTP service and the CLI client."""

from typing import Optional

from pydantic import BaseModel, Field

from ..experiments import ExperimentSpec

Points = list[list[float]]


class MeanRequest(BaseModel):
    points: Points
    rho: float = Field(gt=0)
    delta: float = Field(gt=0, lt=1)
    r: float = Field(ge=0)
    seed: int = 0
    noise_free: bool = False
    rho1_strategy: str = "paper"


class MeanSearchRequest(BaseModel):
    points: Points
    rho: float = Field(gt=0)
    delta: float = Field(gt=0, lt=1)
    beta: float = Field(default=0.1, gt=0, lt=1)
    r_min: float = Field(gt=0)
    r_max: float = Field(gt=0)
    seed: int = 0
    noise_free: bool = False
    rho1_strategy: str = "paper"


class MeanResponse(BaseModel):
    failed: bool
    mean: Optional[list[float]] = None


class ClusterRequest(BaseModel):
    points: Points
    k: int = Field(gt=0)
    t: int = Field(gt=0)
    rho: float = Field(gt=0)
    delta: float = Field(gt=0, lt=1)
    beta: float = Field(default=0.1, gt=0, lt=1)
    r_min: float = Field(gt=0)
    norm_bound: float = Field(gt=0)
    oracle: str = "kmeans++"
    seed: int = 0
    noise_free: bool = False


class ClusterResponse(BaseModel):
    status: str
    failed: bool
    centers: Optional[list[list[float]]] = None
    cost: Optional[float] = None


class CovarianceRequest(BaseModel):
    points: Points
    eps: float = Field(gt=0)
    delta: float = Field(gt=0, lt=1)
    t: int = Field(gt=0)
    eta: Optional[float] = Field(default=None, gt=0)
    c1: Optional[float] = Field(default=None, gt=0)
    seed: int = 0
    noise_free: bool = False


class PrivacyCost(BaseModel):
    eps: float
    delta: float


class CovarianceResponse(BaseModel):
    failed: bool
    covariance: Optional[list[list[float]]] = None
    total_cost: PrivacyCost


class ExperimentRequest(BaseModel):
    spec: ExperimentSpec


class AggregateSummary(BaseModel):
    repetitions: int
    failures: int
    metric: str
    trimmed_mean: float


class ExperimentResponse(BaseModel):
    columns: list[str]
    rows: list[dict]
    aggregate: AggregateSummary
