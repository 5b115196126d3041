import type {
  ApplyResponse,
  Case,
  ConceptCreatedResponse,
  ConceptDetailResponse,
  ConceptOverviewResponse,
  CurveResponse,
  NeighborsResponse,
  OverviewResponse,
  PairResponse,
  RecommendResponse,
  WorkspaceResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: { error: string; detail: string; entity_id?: string | null },
  ) {
    super(body.detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  if (!res.ok) {
    throw new ApiError(res.status, await res.json());
  }
  return (await res.json()) as T;
}

function post(body: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  };
}

export class ApiClient {
  constructor(private base: string) {}

  overview(): Promise<OverviewResponse> {
    return request(`${this.base}/api/overview`);
  }

  selectPair(negative: number, positive: number): Promise<PairResponse> {
    return request(`${this.base}/api/pair`, post({ negative, positive }));
  }

  instances(cases: Case[] = [], brierMin = 0, brierMax = 1): Promise<PairResponse> {
    const params = new URLSearchParams({
      cases: cases.join(","),
      brier_min: String(brierMin),
      brier_max: String(brierMax),
    });
    return request(`${this.base}/api/instances?${params}`);
  }

  neighbors(id: string, k: number): Promise<NeighborsResponse> {
    return request(`${this.base}/api/instances/${id}/neighbors?k=${k}`);
  }

  segmentWorkspace(cases: Case[]): Promise<WorkspaceResponse> {
    return request(`${this.base}/api/segments/workspace`, post({ cases }));
  }

  createConcept(name: string, segmentIds: string[]): Promise<ConceptCreatedResponse> {
    return request(`${this.base}/api/concepts`, post({ name, segment_ids: segmentIds }));
  }

  deleteConcept(id: string): Promise<unknown> {
    return request(`${this.base}/api/concepts/${id}`, { method: "DELETE" });
  }

  concepts(): Promise<ConceptOverviewResponse> {
    return request(`${this.base}/api/concepts`);
  }

  conceptDetail(id: string): Promise<ConceptDetailResponse> {
    return request(`${this.base}/api/concepts/${id}`);
  }

  curve(id: string, evaluate = false): Promise<CurveResponse> {
    return request(`${this.base}/api/concepts/${id}/curve?evaluate=${evaluate}`);
  }

  recommend(id: string, tolerance: number): Promise<RecommendResponse> {
    return request(`${this.base}/api/concepts/${id}/recommend?t=${tolerance}`);
  }

  applyDebias(conceptId: string, n: number): Promise<ApplyResponse> {
    return request(`${this.base}/api/debias`, post({ concept_id: conceptId, n }));
  }
}
