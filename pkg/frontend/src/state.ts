import type { Case } from "./types";

// Everything the views are rendered from, besides the server payloads.
export interface ViewState {
  pair: { negative: number; positive: number } | null;
  brierRange: [number, number];
  caseFilter: Case[];
  selectedInstances: string[];
  workspaceSelection: string[];
  tolerance: number;
  neighborK: number;
  selectedConcept: string | null;
}

export function initialState(): ViewState {
  return {
    pair: null,
    brierRange: [0, 1],
    caseFilter: [],
    selectedInstances: [],
    workspaceSelection: [],
    tolerance: 0.5,
    neighborK: 5,
    selectedConcept: null,
  };
}

const clamp01 = (x: number) => Math.min(1, Math.max(0, x));

export function setBrierRange(state: ViewState, lo: number, hi: number): ViewState {
  const a = clamp01(lo);
  const b = clamp01(hi);
  return { ...state, brierRange: [Math.min(a, b), Math.max(a, b)] };
}

export function setTolerance(state: ViewState, t: number): ViewState {
  return { ...state, tolerance: clamp01(t) };
}
