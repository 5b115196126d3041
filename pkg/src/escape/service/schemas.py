"""Request and response models for the analysis service wire format."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class PairRequest(BaseModel):
    negative: int
    positive: int


class WorkspaceRequest(BaseModel):
    cases: list[str] = Field(default_factory=list)  # empty means all four


class ConceptRequest(BaseModel):
    name: str
    segment_ids: list[str]


class DebiasRequest(BaseModel):
    concept_id: str
    n: int


class ErrorBody(BaseModel):
    error: str
    detail: str
    entity_id: Optional[str] = None


class SessionPayload(BaseModel):
    """Base for top-level responses; carries the session seed for reproducibility."""

    seed: int


class PerformanceCounts(BaseModel):
    correct: int
    known_unknowns: int
    unknown_unknowns: int


class AppliedDebias(BaseModel):
    concept_id: str
    n: int


class OverviewResponse(SessionPayload):
    n_test: int
    accuracy: float
    classes: list[str]
    counts: PerformanceCounts
    brier_histogram: list[int]
    confusion: list[list[int]]
    uu_confusion: list[list[int]]
    misclassified_per_class: list[int]
    uu_per_class: list[int]
    uu_threshold: float
    applied_debias: list[AppliedDebias]


class InstancePayload(BaseModel):
    id: str
    label: int
    predicted: int
    case: str
    brier: float
    coords: tuple[float, float]
    image: Optional[str] = None


class PairResponse(SessionPayload):
    negative: int
    positive: int
    instances: list[InstancePayload]


class NeighborsResponse(SessionPayload):
    id: str
    k: int
    neighbors: list[str]


class SegmentPayload(BaseModel):
    id: str
    instance_id: str
    case: str
    coords: tuple[float, float]
    neighbors: list[str]
    image: Optional[str] = None


class WorkspaceResponse(SessionPayload):
    cases: list[str]
    segments: list[SegmentPayload]


class ConceptCreatedResponse(SessionPayload):
    id: str
    name: str
    n_segments: int
    vector_norm: float


class InfluencePayload(BaseModel):
    size: int
    positive_fraction: Optional[float] = None
    mean_derivative: Optional[float] = None


class ConceptSummary(BaseModel):
    id: str
    name: str
    n_segments: int
    disparity: float
    fp: InfluencePayload
    fn: InfluencePayload


class ConceptOverviewResponse(SessionPayload):
    negative: int
    positive: int
    concepts: list[ConceptSummary]


class ClassAssociation(BaseModel):
    label: int
    class_name: str
    total_association: float


class RankedInstance(BaseModel):
    id: str
    score: float
    label: int
    predicted: Optional[int] = None
    brier: Optional[float] = None


class ConceptDetailResponse(SessionPayload):
    id: str
    name: str
    disparity: float
    class_associations: list[ClassAssociation]
    top_train: list[RankedInstance]
    top_misclassified_test: list[RankedInstance]


class CurveResponse(SessionPayload):
    concept_id: str
    grid: list[int]
    rbr: list[float]
    disparity_before: float
    disparity_after: list[float]
    n_candidates: int
    accuracy_before: Optional[float] = None
    accuracy_after: Optional[list[float]] = None
    subgroup_before: Optional[float] = None
    subgroup_after: Optional[list[float]] = None


class RecommendResponse(SessionPayload):
    concept_id: str
    tolerance: float
    n: int


class ApplyResponse(SessionPayload):
    concept_id: str
    n: int
    disparity_before: float
    disparity_after: float
    remaining_bias_ratio: float
    pct_bias_mitigated: float
    accuracy_before: float
    accuracy_after: float
    subgroup_before: float
    subgroup_after: float
    summary: str
