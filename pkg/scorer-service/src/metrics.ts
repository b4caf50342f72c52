/** Normalized AUC for dev-set model selection.
 *
 * Tie groups enter the precision-recall sweep atomically; the score is
 * the signed area between the curve (extended to recall 0 at its first
 * precision) and the random-precision line, normalized by the area
 * above random. All-tie predictions score exactly 0.
 */

export function aucNorm(scores: number[], labels: number[]): number {
  if (scores.length !== labels.length || scores.length === 0) {
    throw new Error("scores and labels must be equal-length and non-empty");
  }
  const nPos = labels.reduce((a, b) => a + b, 0);
  const n = labels.length;
  if (nPos === 0 || nPos === n) {
    throw new Error("normalized AUC needs both labels present");
  }
  const xi = nPos / n;
  const byScore = new Map<number, { pos: number; total: number }>();
  for (let i = 0; i < n; i++) {
    const entry = byScore.get(scores[i]) ?? { pos: 0, total: 0 };
    entry.pos += labels[i];
    entry.total += 1;
    byScore.set(scores[i], entry);
  }
  const thresholds = Array.from(byScore.keys()).sort((a, b) => b - a);
  const points: Array<[number, number]> = [];
  let tp = 0;
  let seen = 0;
  for (const t of thresholds) {
    const group = byScore.get(t)!;
    tp += group.pos;
    seen += group.total;
    points.push([tp / nPos, tp / seen]);
  }
  if (points[0][0] > 0) points.unshift([0, points[0][1]]);
  let area = 0;
  for (let i = 0; i + 1 < points.length; i++) {
    const [r0, p0] = points[i];
    const [r1, p1] = points[i + 1];
    area += 0.5 * (p0 - xi + (p1 - xi)) * (r1 - r0);
  }
  return area / (1 - xi);
}
