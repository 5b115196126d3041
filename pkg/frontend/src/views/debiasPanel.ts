import { theme } from "../theme";
import type { CurveResponse } from "../types";

const SVG = "http://www.w3.org/2000/svg";
const WIDTH = 460;
const HEIGHT = 260;
const PAD = 30;

export interface DebiasHandlers {
  onTolerance?: (t: number) => void;
  onApply?: (conceptId: string, n: number) => void;
}

// Remaining-bias line chart. The grid point recommended by the service
// for the current tolerance is highlighted with a red stroke; the panel
// never computes the recommendation itself.
export function renderDebiasPanel(
  curve: CurveResponse,
  recommended: number,
  tolerance: number,
  handlers: DebiasHandlers = {},
): HTMLElement {
  const root = document.createElement("section");
  root.className = "debias-panel";
  root.dataset.concept = curve.concept_id;
  root.dataset.recommended = String(recommended);

  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("class", "debias-plot");
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  const nMax = Math.max(1, ...curve.grid);
  const rMin = Math.min(0, ...curve.rbr);
  const rMax = Math.max(1, ...curve.rbr);
  const sx = (n: number) => PAD + (n / nMax) * (WIDTH - 2 * PAD);
  const sy = (r: number) => HEIGHT - PAD - ((r - rMin) / (rMax - rMin)) * (HEIGHT - 2 * PAD);
  const line = document.createElementNS(SVG, "polyline");
  line.setAttribute(
    "points",
    curve.grid.map((n, i) => `${sx(n)},${sy(curve.rbr[i])}`).join(" "),
  );
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", theme.classStroke[1]);
  svg.appendChild(line);
  curve.grid.forEach((n, i) => {
    const dot = document.createElementNS(SVG, "circle");
    dot.setAttribute("class", n === recommended ? "curve-point recommended" : "curve-point");
    dot.dataset.n = String(n);
    dot.dataset.rbr = String(curve.rbr[i]);
    dot.setAttribute("cx", String(sx(n)));
    dot.setAttribute("cy", String(sy(curve.rbr[i])));
    dot.setAttribute("r", n === recommended ? "7" : "4");
    dot.setAttribute("fill", "white");
    dot.setAttribute("stroke", n === recommended ? theme.recommendStroke : theme.axis);
    dot.setAttribute("stroke-width", n === recommended ? "3" : "1");
    svg.appendChild(dot);
  });
  root.appendChild(svg);

  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.01";
  slider.value = String(tolerance);
  slider.className = "tolerance-slider";
  slider.addEventListener("input", () => handlers.onTolerance?.(Number(slider.value)));
  root.appendChild(slider);

  const i = curve.grid.indexOf(recommended);
  const summary = document.createElement("p");
  summary.className = "debias-summary";
  const parts = [
    `Debiasing ${recommended} of ${curve.n_candidates} associated training instances`,
    `keeps ${i >= 0 ? (100 * curve.rbr[i]).toFixed(1) : "?"}% of the between-class disparity`,
    `(${curve.disparity_before.toFixed(2)} before${
      i >= 0 ? `, ${curve.disparity_after[i].toFixed(2)} after` : ""
    })`,
  ];
  if (i >= 0 && curve.accuracy_after && curve.accuracy_before != null) {
    parts.push(
      `; test accuracy ${curve.accuracy_before.toFixed(3)} → ${curve.accuracy_after[
        i
      ].toFixed(3)}`,
    );
  }
  summary.textContent = parts.join(" ") + ".";
  root.appendChild(summary);

  const apply = document.createElement("button");
  apply.className = "apply-debias";
  apply.textContent = `debias ${recommended} instances`;
  apply.addEventListener("click", () => handlers.onApply?.(curve.concept_id, recommended));
  root.appendChild(apply);
  return root;
}
