"""Request/response models for the HTTP service.

Pydantic validates shapes and ranges at the boundary; endpoint handlers
convert these into core types. Validation failures surface as HTTP 422,
which clients treat as configuration errors.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from ..classify import Practical, TheoryDefault, TheoryVC
from ..synthetic import PiecewiseDistribution, parse_distribution, step_distribution


class RuleSpec(BaseModel):
    """Threshold schedule for the stopping rule."""

    variant: Literal["practical", "theory-default", "theory-vc"] = "practical"
    a: float = Field(default=1.0, ge=0.0)
    c1: float = Field(default=2.0, gt=0.0)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    d0: int = Field(default=2, ge=1)

    def to_rule(self):
        if self.variant == "practical":
            return Practical(self.a)
        if self.variant == "theory-default":
            return TheoryDefault(self.c1, self.delta)
        return TheoryVC(self.c1, self.delta, self.d0)


class SyntheticSpec(BaseModel):
    """A named analytic distribution, or a serialized piecewise description."""

    name: Optional[Literal["step"]] = None
    noise: float = Field(default=0.0, ge=0.0, le=0.5)
    boundary: float = Field(default=0.5, gt=0.0, lt=1.0)
    text: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.name is None) == (self.text is None):
            raise ValueError("give exactly one of 'name' or 'text'")
        return self

    def to_distribution(self) -> PiecewiseDistribution:
        if self.text is not None:
            return parse_distribution(self.text)
        return step_distribution(noise=self.noise, boundary=self.boundary)


class DataSource(BaseModel):
    """Where experiment data comes from: an uploaded CSV or a synthetic draw."""

    kind: Literal["csv", "synthetic"]
    # csv fields
    csv_text: Optional[str] = None
    label_column: str = "label"
    test_fraction: float = Field(default=0.3, gt=0.0, lt=1.0)
    # synthetic fields
    synthetic: Optional[SyntheticSpec] = None
    n_train: int = Field(default=1000, ge=1)
    n_test: int = Field(default=500, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _fields_match_kind(self):
        if self.kind == "csv" and self.csv_text is None:
            raise ValueError("csv source needs csv_text")
        if self.kind == "synthetic" and self.synthetic is None:
            raise ValueError("synthetic source needs a synthetic spec")
        return self


class NoiseSweepRequest(BaseModel):
    data: DataSource
    noise_levels: list[float] = Field(min_length=1)
    k_list: list[int] = Field(default_factory=list)
    a_list: list[float] = Field(default_factory=list)
    seed: int = 0
    metric: Literal["euclidean", "manhattan"] = "euclidean"
    resolve: bool = True

    @model_validator(mode="after")
    def _nonempty_methods(self):
        if not self.k_list and not self.a_list:
            raise ValueError("need at least one entry in k_list or a_list")
        for p in self.noise_levels:
            if not 0.0 <= p <= 1.0:
                raise ValueError("noise levels must lie in [0, 1]")
        for k in self.k_list:
            if k < 1:
                raise ValueError("k values must be positive")
        for a in self.a_list:
            if a < 0:
                raise ValueError("a values must be nonnegative")
        return self


class KSweepRequest(BaseModel):
    data: DataSource
    a_list: list[float] = Field(min_length=1)
    k_caps: list[int] = Field(min_length=1)
    seed: int = 0
    metric: Literal["euclidean", "manhattan"] = "euclidean"
    mode: Literal["binary", "multiclass"] = "binary"

    @model_validator(mode="after")
    def _positive(self):
        if any(k < 1 for k in self.k_caps):
            raise ValueError("k caps must be positive")
        if any(a < 0 for a in self.a_list):
            raise ValueError("a values must be nonnegative")
        return self


class RatesRequest(BaseModel):
    distribution: SyntheticSpec
    points: list[float] = Field(default_factory=lambda: [0.25])
    n_schedule: list[int] = Field(default_factory=lambda: [16, 32, 64, 128, 256, 512, 1024, 2048, 4096])
    replicas: int = Field(default=200, ge=1)
    rule: RuleSpec = Field(default_factory=lambda: RuleSpec(variant="theory-default"))
    risk_n_schedule: list[int] = Field(default_factory=lambda: [500, 2000, 8000])
    risk_replicas: int = Field(default=10, ge=1)
    risk_eval_size: int = Field(default=2000, ge=1)
    risk_rule: RuleSpec = Field(default_factory=lambda: RuleSpec(variant="practical", a=2.0))
    seed: int = 0

    @model_validator(mode="after")
    def _positive_ns(self):
        if any(n < 1 for n in self.n_schedule) or any(n < 1 for n in self.risk_n_schedule):
            raise ValueError("sample sizes must be positive")
        for x in self.points:
            if not 0.0 <= x <= 1.0:
                raise ValueError("query points must lie in [0, 1]")
        return self


class UcecmRequest(BaseModel):
    distribution: SyntheticSpec
    n: int = Field(default=2000, ge=10)
    trials: int = Field(default=200, ge=50)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    m: int = Field(default=20, ge=5, le=50)
    seed: int = 0


class BiasLemmaRequest(UcecmRequest):
    c1: float = Field(default=2.0, gt=0.0)
    include_log_n: bool = True


class MassLemmaRequest(UcecmRequest):
    c_o: float = Field(default=1.0, ge=0.0)


class CounterexampleRequest(BaseModel):
    n_values: list[int] = Field(default_factory=lambda: [10, 100, 1000, 10000])
    trials: int = Field(default=200, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _n_floor(self):
        if any(n < 10 for n in self.n_values):
            raise ValueError("atom counts must be at least 10")
        return self


class DatasetUpload(BaseModel):
    """Register a dataset with the service (CSV text or a synthetic draw)."""

    csv_text: Optional[str] = None
    label_column: str = "label"
    synthetic: Optional[SyntheticSpec] = None
    n: int = Field(default=1000, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _one_source(self):
        if (self.csv_text is None) == (self.synthetic is None):
            raise ValueError("give exactly one of csv_text or synthetic")
        return self


class DatasetInfo(BaseModel):
    dataset_id: str
    n: int
    dim: int
    alphabet: list


class PredictRequest(BaseModel):
    dataset_id: Optional[str] = None
    data: Optional[DatasetUpload] = None
    query: list[float] = Field(min_length=1)
    rule: RuleSpec = Field(default_factory=RuleSpec)
    mode: Literal["binary", "multiclass"] = "binary"
    metric: Literal["euclidean", "manhattan"] = "euclidean"
    exclude_self: bool = False
    max_k: Optional[int] = Field(default=None, ge=1)
    resolve: bool = False

    @model_validator(mode="after")
    def _one_source(self):
        if (self.dataset_id is None) == (self.data is None):
            raise ValueError("give exactly one of dataset_id or data")
        return self


class TraceRow(BaseModel):
    k: int
    radius: float
    shares: list[float]
    statistic: float
    threshold: float
    fires: bool
    labels: list


class PredictResponse(BaseModel):
    labels: Optional[list] = None
    chosen_k: Optional[int] = None
    margin: Optional[float] = None
    abstained: bool
    resolved_label: Optional[str] = None
    trace: list[TraceRow]


class SweepResponse(BaseModel):
    rows: list[dict]
    csv: str
    chart_svg: str
    config_hash: str


class RatesResponse(BaseModel):
    pointwise_rows: list[dict]
    pointwise_csv: str
    pointwise_chart_svg: str
    risk_rows: list[dict]
    risk_csv: str
    risk_chart_svg: str
    config_hash: str


class ValidationResponse(BaseModel):
    trials: int
    violations: int
    empirical_failure_rate: float
    bound_delta: float
    worst_gap: Optional[float] = None
    config: dict


class CounterexampleResponse(BaseModel):
    rows: list[dict]
    csv: str
    chart_svg: str
    config_hash: str


class HealthResponse(BaseModel):
    status: str
    version: str
