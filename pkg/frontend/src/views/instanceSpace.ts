import { classStroke, theme } from "../theme";
import type { ViewState } from "../state";
import type { InstancePayload, PairResponse } from "../types";

const SVG = "http://www.w3.org/2000/svg";
const SIZE = 420;
const PAD = 16;

export interface InstanceSpaceHandlers {
  onHover?: (id: string, k: number) => void;
  onSelect?: (ids: string[]) => void;
}

export function visibleInstances(pair: PairResponse, state: ViewState): InstancePayload[] {
  const [lo, hi] = state.brierRange;
  return pair.instances.filter(
    (ins) =>
      ins.brier >= lo &&
      ins.brier <= hi &&
      (state.caseFilter.length === 0 || state.caseFilter.includes(ins.case)),
  );
}

function extent(values: number[]): [number, number] {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  return hi > lo ? [lo, hi] : [lo - 1, hi + 1];
}

// Scatter over the projected activation space: hollow circles for correct
// predictions, filled ones for misclassifications (pink below the
// unknown-unknown threshold, dark red at or above it), stroked orange or
// purple by the true class.
export function renderInstanceSpace(
  pair: PairResponse,
  state: ViewState,
  uuThreshold: number,
  handlers: InstanceSpaceHandlers = {},
): SVGElement {
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("class", "instance-space");
  svg.setAttribute("width", String(SIZE));
  svg.setAttribute("height", String(SIZE));
  const shown = visibleInstances(pair, state);
  svg.dataset.visibleCount = String(shown.length);
  if (shown.length === 0) {
    return svg;
  }
  const [x0, x1] = extent(shown.map((i) => i.coords[0]));
  const [y0, y1] = extent(shown.map((i) => i.coords[1]));
  const sx = (x: number) => PAD + ((x - x0) / (x1 - x0)) * (SIZE - 2 * PAD);
  const sy = (y: number) => SIZE - PAD - ((y - y0) / (y1 - y0)) * (SIZE - 2 * PAD);
  for (const ins of shown) {
    const wrong = ins.case === "FP" || ins.case === "FN";
    const dot = document.createElementNS(SVG, "circle");
    dot.setAttribute("class", wrong ? "instance wrong" : "instance right");
    dot.dataset.id = ins.id;
    dot.dataset.case = ins.case;
    dot.dataset.brier = String(ins.brier);
    dot.setAttribute("cx", String(sx(ins.coords[0])));
    dot.setAttribute("cy", String(sy(ins.coords[1])));
    dot.setAttribute("r", wrong ? "6" : "4");
    dot.setAttribute("stroke", classStroke(ins.label, pair.negative));
    dot.setAttribute("stroke-width", "1.5");
    dot.setAttribute(
      "fill",
      wrong ? (ins.brier >= uuThreshold ? theme.unknownUnknown : theme.knownUnknown) : "none",
    );
    if (handlers.onHover) {
      dot.addEventListener("mouseenter", () => handlers.onHover!(ins.id, state.neighborK));
    }
    if (handlers.onSelect) {
      dot.addEventListener("click", () => handlers.onSelect!([ins.id]));
    }
    svg.appendChild(dot);
  }
  return svg;
}

// Brier-range slider pair summarizing the confidence filter.
export function renderConfidenceFilter(
  state: ViewState,
  onChange: (lo: number, hi: number) => void,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "confidence-filter";
  const make = (value: number, cls: string) => {
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.01";
    input.value = String(value);
    input.className = cls;
    return input;
  };
  const lo = make(state.brierRange[0], "brier-min");
  const hi = make(state.brierRange[1], "brier-max");
  const emit = () => onChange(Number(lo.value), Number(hi.value));
  lo.addEventListener("input", emit);
  hi.addEventListener("input", emit);
  box.appendChild(lo);
  box.appendChild(hi);
  return box;
}

export function renderNeighborTooltip(ids: string[]): HTMLElement {
  const tip = document.createElement("div");
  tip.className = "neighbor-tooltip";
  for (const id of ids) {
    const chip = document.createElement("span");
    chip.className = "neighbor";
    chip.dataset.id = id;
    chip.textContent = id;
    tip.appendChild(chip);
  }
  return tip;
}
