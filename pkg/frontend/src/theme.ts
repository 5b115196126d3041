// Single place for the color scheme: orange/purple class strokes, the
// four confusion cases as lighter/darker variants of those two, and the
// pink / dark-red pair for low- and high-confidence misclassifications.

export const theme = {
  classStroke: ["#e08214", "#8073ac"] as const, // negative: orange, positive: purple
  caseFill: {
    TN: "#fee0b6",
    FP: "#b35806",
    FN: "#d8daeb",
    TP: "#542788",
  } as const,
  knownUnknown: "#f1a5c0",
  unknownUnknown: "#99000d",
  misclassOutline: "#f1a5c0",
  recommendStroke: "#d62728",
  axis: "#888888",
};

export function classStroke(label: number, negative: number): string {
  return label === negative ? theme.classStroke[0] : theme.classStroke[1];
}

// Square-root area scaling keeps circle area proportional to the count.
export function countRadius(count: number, scale = 3): number {
  return count > 0 ? scale * Math.sqrt(count) : 0;
}
