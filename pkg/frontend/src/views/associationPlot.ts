import { countRadius, theme } from "../theme";
import type { ConceptDetailResponse, ConceptOverviewResponse } from "../types";

const SVG = "http://www.w3.org/2000/svg";
const WIDTH = 480;
const HEIGHT = 320;
const MID = HEIGHT / 2;
const PAD = 24;

export interface AssociationHandlers {
  onSelect?: (conceptId: string) => void;
}

// Each concept is a vertically aligned circle pair on a shared x given by
// its between-class disparity (centered at zero): the upper half carries
// the influence toward false negatives, the lower half toward false
// positives, with circle areas proportional to the group sizes.
export function renderAssociationPlot(
  payload: ConceptOverviewResponse,
  handlers: AssociationHandlers = {},
): SVGElement {
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("class", "association-plot");
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  const axis = document.createElementNS(SVG, "line");
  axis.setAttribute("x1", String(PAD));
  axis.setAttribute("x2", String(WIDTH - PAD));
  axis.setAttribute("y1", String(MID));
  axis.setAttribute("y2", String(MID));
  axis.setAttribute("stroke", theme.axis);
  svg.appendChild(axis);
  const maxAbs = Math.max(1e-12, ...payload.concepts.map((c) => Math.abs(c.disparity)));
  const sx = (d: number) => WIDTH / 2 + (d / maxAbs) * (WIDTH / 2 - PAD);
  const sy = (fraction: number | null | undefined, upper: boolean) => {
    const f = fraction ?? 0;
    return upper ? MID - f * (MID - PAD) : MID + f * (MID - PAD);
  };
  for (const concept of payload.concepts) {
    const group = document.createElementNS(SVG, "g");
    group.setAttribute("class", "concept");
    group.dataset.id = concept.id;
    group.dataset.disparity = String(concept.disparity);
    const x = sx(concept.disparity);
    const fn = document.createElementNS(SVG, "circle");
    fn.setAttribute("class", "fn-circle");
    fn.dataset.size = String(concept.fn.size);
    fn.dataset.influence = String(concept.fn.positive_fraction ?? "");
    fn.setAttribute("cx", String(x));
    fn.setAttribute("cy", String(sy(concept.fn.positive_fraction, true)));
    fn.setAttribute("r", String(countRadius(concept.fn.size, 2)));
    fn.setAttribute("fill", theme.classStroke[1]);
    fn.setAttribute("fill-opacity", "0.6");
    group.appendChild(fn);
    const fp = document.createElementNS(SVG, "circle");
    fp.setAttribute("class", "fp-circle");
    fp.dataset.size = String(concept.fp.size);
    fp.dataset.influence = String(concept.fp.positive_fraction ?? "");
    fp.setAttribute("cx", String(x));
    fp.setAttribute("cy", String(sy(concept.fp.positive_fraction, false)));
    fp.setAttribute("r", String(countRadius(concept.fp.size, 2)));
    fp.setAttribute("fill", theme.classStroke[0]);
    fp.setAttribute("fill-opacity", "0.6");
    group.appendChild(fp);
    const stem = document.createElementNS(SVG, "line");
    stem.setAttribute("x1", String(x));
    stem.setAttribute("x2", String(x));
    stem.setAttribute("y1", String(sy(concept.fn.positive_fraction, true)));
    stem.setAttribute("y2", String(sy(concept.fp.positive_fraction, false)));
    stem.setAttribute("stroke", theme.axis);
    group.appendChild(stem);
    const label = document.createElementNS(SVG, "text");
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(MID - 6));
    label.setAttribute("text-anchor", "middle");
    label.textContent = concept.name;
    group.appendChild(label);
    if (handlers.onSelect) {
      group.addEventListener("click", () => handlers.onSelect!(concept.id));
    }
    svg.appendChild(group);
  }
  return svg;
}

function rankedList(title: string, rows: ConceptDetailResponse["top_train"]): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "ranked-list";
  const head = document.createElement("h3");
  head.textContent = title;
  panel.appendChild(head);
  const ol = document.createElement("ol");
  for (const row of rows) {
    const li = document.createElement("li");
    li.dataset.id = row.id;
    li.dataset.score = String(row.score);
    li.textContent = `${row.id} (${row.score.toFixed(3)})`;
    ol.appendChild(li);
  }
  panel.appendChild(ol);
  return panel;
}

// Detail panels: what the model learned (training-side association bars
// and top instances) and where it failed (top misclassified tests).
export function renderConceptDetail(detail: ConceptDetailResponse): HTMLElement {
  const root = document.createElement("section");
  root.className = "concept-detail";
  root.dataset.id = detail.id;
  const learn = document.createElement("div");
  learn.className = "learned-panel";
  const q1 = document.createElement("h2");
  q1.textContent = "What did the model learn?";
  learn.appendChild(q1);
  const maxAssoc = Math.max(1e-12, ...detail.class_associations.map((c) => c.total_association));
  for (const assoc of detail.class_associations) {
    const bar = document.createElement("div");
    bar.className = "class-bar";
    bar.dataset.label = String(assoc.label);
    bar.dataset.total = String(assoc.total_association);
    bar.style.width = `${(100 * assoc.total_association) / maxAssoc}%`;
    bar.textContent = `${assoc.class_name}: ${assoc.total_association.toFixed(2)}`;
    learn.appendChild(bar);
  }
  learn.appendChild(rankedList("top associated training instances", detail.top_train));
  root.appendChild(learn);
  const fail = document.createElement("div");
  fail.className = "failed-panel";
  const q2 = document.createElement("h2");
  q2.textContent = "What did the model fail?";
  fail.appendChild(q2);
  fail.appendChild(
    rankedList("top associated misclassified tests", detail.top_misclassified_test),
  );
  root.appendChild(fail);
  return root;
}
