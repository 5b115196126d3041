import { theme } from "../theme";
import type { Case, InstancePayload, SegmentPayload, WorkspaceResponse } from "../types";

const SVG = "http://www.w3.org/2000/svg";
const CASES: Case[] = ["TN", "FP", "FN", "TP"];
const SIZE = 420;
const PAD = 14;

export interface ContrastHandlers {
  onSegmentPick?: (ids: string[]) => void;
  onCreateConcept?: (name: string, segmentIds: string[]) => void;
}

// Four panels, one per confusion case, each headed by an arrow from the
// actual to the predicted class whose width scales with the group size.
export function renderContrastPanels(
  instances: InstancePayload[],
  classes: string[],
  pair: { negative: number; positive: number },
): HTMLElement {
  const root = document.createElement("div");
  root.className = "contrast-view";
  const byCase = new Map<Case, InstancePayload[]>(CASES.map((c) => [c, []]));
  for (const ins of instances) {
    byCase.get(ins.case)!.push(ins);
  }
  for (const c of CASES) {
    const members = byCase.get(c)!;
    const panel = document.createElement("div");
    panel.className = `case-panel ${c}`;
    panel.dataset.case = c;
    panel.dataset.size = String(members.length);
    const truePos = c === "TP" || c === "FN";
    const predPos = c === "TP" || c === "FP";
    const from = classes[truePos ? pair.positive : pair.negative];
    const to = classes[predPos ? pair.positive : pair.negative];
    const header = document.createElement("div");
    header.className = "case-arrow";
    header.style.borderBottomWidth = `${1 + Math.sqrt(members.length)}px`;
    header.style.borderBottomColor = theme.caseFill[c];
    header.textContent = `${from} → ${to} (${members.length})`;
    panel.appendChild(header);
    const list = document.createElement("div");
    list.className = "case-members";
    for (const ins of members) {
      const chip = document.createElement("span");
      chip.className = "member";
      chip.dataset.id = ins.id;
      if (ins.image) {
        const img = document.createElement("img");
        img.src = ins.image;
        img.alt = ins.id;
        chip.appendChild(img);
      } else {
        chip.textContent = ins.id;
      }
      list.appendChild(chip);
    }
    panel.appendChild(list);
    root.appendChild(panel);
  }
  return root;
}

function extent(values: number[]): [number, number] {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  return hi > lo ? [lo, hi] : [lo - 1, hi + 1];
}

// Projected segment scatter; clicking a segment selects it together with
// its nearest neighbors (the grouping the service precomputed, k=10).
export function renderSegmentWorkspace(
  workspace: WorkspaceResponse,
  handlers: ContrastHandlers = {},
): SVGElement {
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("class", "segment-workspace");
  svg.setAttribute("width", String(SIZE));
  svg.setAttribute("height", String(SIZE));
  svg.dataset.count = String(workspace.segments.length);
  if (workspace.segments.length === 0) {
    return svg;
  }
  const [x0, x1] = extent(workspace.segments.map((s) => s.coords[0]));
  const [y0, y1] = extent(workspace.segments.map((s) => s.coords[1]));
  const sx = (x: number) => PAD + ((x - x0) / (x1 - x0)) * (SIZE - 2 * PAD);
  const sy = (y: number) => SIZE - PAD - ((y - y0) / (y1 - y0)) * (SIZE - 2 * PAD);
  for (const seg of workspace.segments) {
    const rect = document.createElementNS(SVG, "rect");
    rect.setAttribute("class", "segment");
    rect.dataset.id = seg.id;
    rect.dataset.instance = seg.instance_id;
    rect.dataset.case = seg.case;
    rect.setAttribute("x", String(sx(seg.coords[0]) - 4));
    rect.setAttribute("y", String(sy(seg.coords[1]) - 4));
    rect.setAttribute("width", "8");
    rect.setAttribute("height", "8");
    rect.setAttribute("fill", theme.caseFill[seg.case]);
    if (handlers.onSegmentPick) {
      rect.addEventListener("click", () =>
        handlers.onSegmentPick!([seg.id, ...seg.neighbors]),
      );
    }
    svg.appendChild(rect);
  }
  return svg;
}

// Editable concept definition: members can be removed by clicking, the
// name typed in, and the survivors submitted as a new concept.
export function renderConceptForm(
  selection: SegmentPayload[],
  handlers: ContrastHandlers = {},
): HTMLElement {
  const box = document.createElement("form");
  box.className = "concept-form";
  const name = document.createElement("input");
  name.type = "text";
  name.className = "concept-name";
  name.placeholder = "concept name";
  box.appendChild(name);
  const members = document.createElement("div");
  members.className = "concept-members";
  const kept = new Set(selection.map((s) => s.id));
  for (const seg of selection) {
    const chip = document.createElement("span");
    chip.className = "member";
    chip.dataset.id = seg.id;
    chip.textContent = seg.id;
    chip.addEventListener("click", () => {
      kept.delete(seg.id);
      chip.remove();
    });
    members.appendChild(chip);
  }
  box.appendChild(members);
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "define concept";
  box.appendChild(submit);
  box.addEventListener("submit", (event) => {
    event.preventDefault();
    if (handlers.onCreateConcept && kept.size > 0) {
      handlers.onCreateConcept(name.value || "unnamed", [...kept]);
    }
  });
  return box;
}
