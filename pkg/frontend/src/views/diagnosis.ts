import { countRadius, theme } from "../theme";
import type { OverviewResponse } from "../types";

const SVG = "http://www.w3.org/2000/svg";
const CELL = 72;
const BAR_MAX = 40;

export interface DiagnosisHandlers {
  onSelectPair?: (negative: number, positive: number) => void;
}

// Performance chart: instance-level counts of correct predictions and the
// two misclassification kinds, plus the Brier-score histogram.
function performanceChart(overview: OverviewResponse): HTMLElement {
  const box = document.createElement("div");
  box.className = "performance-chart";
  const rows: Array<[string, number, string]> = [
    ["correct", overview.counts.correct, theme.caseFill.TN],
    ["known-unknowns", overview.counts.known_unknowns, theme.knownUnknown],
    ["unknown-unknowns", overview.counts.unknown_unknowns, theme.unknownUnknown],
  ];
  const acc = document.createElement("div");
  acc.className = "accuracy";
  acc.dataset.accuracy = String(overview.accuracy);
  acc.textContent = `accuracy ${overview.accuracy.toFixed(3)} over ${overview.n_test} test instances`;
  box.appendChild(acc);
  for (const [label, count, color] of rows) {
    const row = document.createElement("div");
    row.className = `count-row ${label}`;
    row.dataset.count = String(count);
    const swatch = document.createElement("span");
    swatch.style.background = color;
    swatch.className = "swatch";
    row.appendChild(swatch);
    row.appendChild(document.createTextNode(`${label}: ${count}`));
    box.appendChild(row);
  }
  const hist = document.createElement("div");
  hist.className = "brier-histogram";
  overview.brier_histogram.forEach((h, i) => {
    const bin = document.createElement("span");
    bin.className = "bin";
    bin.dataset.bin = String(i);
    bin.dataset.count = String(h);
    bin.style.height = `${h}px`;
    hist.appendChild(bin);
  });
  box.appendChild(hist);
  return box;
}

// Confusion matrix: rows are true classes. Off-diagonal cells with errors
// carry a pink outer circle sized by the misclassification count and a
// dark-red inner circle sized by the unknown-unknown count; per-class
// unknown-unknown totals appear as red bars on the row labels.
function confusionMatrix(overview: OverviewResponse, handlers: DiagnosisHandlers): SVGElement {
  const k = overview.classes.length;
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("class", "confusion-matrix");
  svg.setAttribute("width", String(CELL * (k + 1) + BAR_MAX + 90));
  svg.setAttribute("height", String(CELL * (k + 1)));
  const maxUU = Math.max(1, ...overview.uu_per_class);
  for (let t = 0; t < k; t++) {
    const label = document.createElementNS(SVG, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(CELL * (t + 1) + CELL / 2));
    label.textContent = overview.classes[t];
    svg.appendChild(label);
    if (overview.uu_per_class[t] > 0) {
      const bar = document.createElementNS(SVG, "rect");
      bar.setAttribute("class", "uu-bar");
      bar.dataset.label = String(t);
      bar.dataset.count = String(overview.uu_per_class[t]);
      bar.setAttribute("x", String(CELL * (k + 1) + 50));
      bar.setAttribute("y", String(CELL * (t + 1) + CELL / 2 - 6));
      bar.setAttribute("height", "12");
      bar.setAttribute("width", String((BAR_MAX * overview.uu_per_class[t]) / maxUU));
      bar.setAttribute("fill", theme.unknownUnknown);
      svg.appendChild(bar);
    }
  }
  for (let t = 0; t < k; t++) {
    for (let p = 0; p < k; p++) {
      const cx = CELL * (p + 1) + CELL / 2 + 60;
      const cy = CELL * (t + 1) + CELL / 2;
      const cell = document.createElementNS(SVG, "g");
      cell.setAttribute("class", "cell");
      cell.dataset.true = String(t);
      cell.dataset.predicted = String(p);
      const count = overview.confusion[t][p];
      const uu = overview.uu_confusion[t][p];
      if (t !== p && count > 0) {
        const outer = document.createElementNS(SVG, "circle");
        outer.setAttribute("class", "misclass-circle");
        outer.dataset.count = String(count);
        outer.setAttribute("cx", String(cx));
        outer.setAttribute("cy", String(cy));
        outer.setAttribute("r", String(countRadius(count)));
        outer.setAttribute("fill", theme.misclassOutline);
        cell.appendChild(outer);
        if (uu > 0) {
          const inner = document.createElementNS(SVG, "circle");
          inner.setAttribute("class", "uu-circle");
          inner.dataset.count = String(uu);
          inner.setAttribute("cx", String(cx));
          inner.setAttribute("cy", String(cy));
          inner.setAttribute("r", String(countRadius(uu)));
          inner.setAttribute("fill", theme.unknownUnknown);
          cell.appendChild(inner);
        }
      }
      const text = document.createElementNS(SVG, "text");
      text.setAttribute("x", String(cx));
      text.setAttribute("y", String(cy + 4));
      text.setAttribute("text-anchor", "middle");
      text.textContent = String(count);
      cell.appendChild(text);
      if (t !== p && handlers.onSelectPair) {
        cell.addEventListener("click", () => handlers.onSelectPair!(t, p));
      }
      svg.appendChild(cell);
    }
  }
  return svg;
}

export function renderDiagnosis(
  overview: OverviewResponse,
  handlers: DiagnosisHandlers = {},
): HTMLElement {
  const root = document.createElement("section");
  root.className = "diagnosis-view";
  root.appendChild(performanceChart(overview));
  root.appendChild(confusionMatrix(overview, handlers));
  return root;
}
