// Wire-format payloads of the analysis service.

export type Case = "TN" | "FP" | "FN" | "TP";

export interface PerformanceCounts {
  correct: number;
  known_unknowns: number;
  unknown_unknowns: number;
}

export interface AppliedDebias {
  concept_id: string;
  n: number;
}

export interface OverviewResponse {
  seed: number;
  n_test: number;
  accuracy: number;
  classes: string[];
  counts: PerformanceCounts;
  brier_histogram: number[];
  confusion: number[][];
  uu_confusion: number[][];
  misclassified_per_class: number[];
  uu_per_class: number[];
  uu_threshold: number;
  applied_debias: AppliedDebias[];
}

export interface InstancePayload {
  id: string;
  label: number;
  predicted: number;
  case: Case;
  brier: number;
  coords: [number, number];
  image?: string | null;
}

export interface PairResponse {
  seed: number;
  negative: number;
  positive: number;
  instances: InstancePayload[];
}

export interface NeighborsResponse {
  seed: number;
  id: string;
  k: number;
  neighbors: string[];
}

export interface SegmentPayload {
  id: string;
  instance_id: string;
  case: Case;
  coords: [number, number];
  neighbors: string[];
  image?: string | null;
}

export interface WorkspaceResponse {
  seed: number;
  cases: Case[];
  segments: SegmentPayload[];
}

export interface ConceptCreatedResponse {
  seed: number;
  id: string;
  name: string;
  n_segments: number;
  vector_norm: number;
}

export interface InfluencePayload {
  size: number;
  positive_fraction?: number | null;
  mean_derivative?: number | null;
}

export interface ConceptSummary {
  id: string;
  name: string;
  n_segments: number;
  disparity: number;
  fp: InfluencePayload;
  fn: InfluencePayload;
}

export interface ConceptOverviewResponse {
  seed: number;
  negative: number;
  positive: number;
  concepts: ConceptSummary[];
}

export interface ClassAssociation {
  label: number;
  class_name: string;
  total_association: number;
}

export interface RankedInstance {
  id: string;
  score: number;
  label: number;
  predicted?: number | null;
  brier?: number | null;
}

export interface ConceptDetailResponse {
  seed: number;
  id: string;
  name: string;
  disparity: number;
  class_associations: ClassAssociation[];
  top_train: RankedInstance[];
  top_misclassified_test: RankedInstance[];
}

export interface CurveResponse {
  seed: number;
  concept_id: string;
  grid: number[];
  rbr: number[];
  disparity_before: number;
  disparity_after: number[];
  n_candidates: number;
  accuracy_before?: number | null;
  accuracy_after?: number[] | null;
  subgroup_before?: number | null;
  subgroup_after?: number[] | null;
}

export interface RecommendResponse {
  seed: number;
  concept_id: string;
  tolerance: number;
  n: number;
}

export interface ApplyResponse {
  seed: number;
  concept_id: string;
  n: number;
  disparity_before: number;
  disparity_after: number;
  remaining_bias_ratio: number;
  pct_bias_mitigated: number;
  accuracy_before: number;
  accuracy_after: number;
  subgroup_before: number;
  subgroup_after: number;
  summary: string;
}

export interface ErrorBody {
  error: string;
  detail: string;
  entity_id?: string | null;
}
