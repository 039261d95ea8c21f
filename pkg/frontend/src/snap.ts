/** Range-to-bin snapping that mirrors the server's bin arithmetic.
 *
 * The server's bins are right-closed: K sorted edges make K+1 bins, bin i
 * spanning (edge[i-1], edge[i]] with unbounded end bins. An edit range
 * [lo, hi] affects every bin whose interval intersects it as a point set,
 * which works out to `hi > left_i && right_i >= lo`. The UI never edits
 * scores itself; it only needs this rule to show which bins a drag will
 * touch and to emit a canonical range that round-trips to the same bins.
 */

import type { Interval } from "./types.js";

/** Mask of bins intersected by [lo, hi]; null endpoints are unbounded. */
export function affectedBins(
  edges: number[],
  lo: number | null,
  hi: number | null,
): boolean[] {
  const lower = lo === null ? -Infinity : lo;
  const upper = hi === null ? Infinity : hi;
  const nBins = edges.length + 1;
  const mask: boolean[] = new Array(nBins);
  for (let i = 0; i < nBins; i++) {
    const left = i === 0 ? -Infinity : edges[i - 1];
    const right = i === edges.length ? Infinity : edges[i];
    mask[i] = upper > left && right >= lower;
  }
  return mask;
}

export interface SnappedRange {
  /** Index of the first and last affected bin, inclusive. */
  first: number;
  last: number;
  /** Canonical endpoints that re-derive to exactly these bins. */
  range: Interval;
}

/** Snap a raw drag selection to the bins it touches.
 *
 * The canonical endpoints are the right edge of the first affected bin and
 * the right edge of the last one (null where a side is unbounded). Under
 * the intersection rule above, a range can only exclude the bin to its
 * left by starting strictly inside the first bin, and a bin's right edge
 * is the one point guaranteed to be inside it; re-deriving the mask from
 * the snapped range therefore reproduces it exactly. The sole exception is
 * a selection confined to the unbounded last bin, which has no finite
 * point of its own to snap to, so the raw lower endpoint is kept.
 */
export function snapSelection(
  edges: number[],
  rawLo: number,
  rawHi: number,
): SnappedRange {
  if (rawLo > rawHi) {
    [rawLo, rawHi] = [rawHi, rawLo];
  }
  const mask = affectedBins(edges, rawLo, rawHi);
  const first = mask.indexOf(true);
  const last = mask.lastIndexOf(true);
  const lastBin = edges.length;
  let lo: number | null;
  if (first === 0) {
    lo = null;
  } else if (first === lastBin) {
    lo = rawLo; // inside the unbounded last bin: no edge to snap to
  } else {
    lo = edges[first];
  }
  const hi = last === lastBin ? null : edges[last];
  return { first, last, range: [lo, hi] };
}

/** Snap a 2D drag to a rectangle of cells, one snap per axis. */
export function snapRect(
  edgesX: number[],
  edgesY: number[],
  rawX: [number, number],
  rawY: [number, number],
): { x: SnappedRange; y: SnappedRange; range: [Interval, Interval] } {
  const x = snapSelection(edgesX, rawX[0], rawX[1]);
  const y = snapSelection(edgesY, rawY[0], rawY[1]);
  return { x, y, range: [x.range, y.range] };
}

/** Canonical range for an inclusive run of bin indices.
 *
 * Used when the selection arrives as bin indices (heatmap cell picks)
 * rather than raw values. Follows the same convention as snapSelection;
 * a run confined to the unbounded last bin synthesizes a point strictly
 * inside it, since no finite edge exists there.
 */
export function rangeForBinSpan(
  edges: number[],
  first: number,
  last: number,
): SnappedRange {
  const lastBin = edges.length;
  let lo: number | null;
  if (first === 0) {
    lo = null;
  } else if (first === lastBin) {
    const prev = edges[lastBin - 1];
    lo = prev + Math.max(1, Math.abs(prev));
  } else {
    lo = edges[first];
  }
  const hi = last === lastBin ? null : edges[last];
  return { first, last, range: [lo, hi] };
}

/** Human-readable interval covered by a run of bins, e.g. "(0.2, 0.6]". */
export function describeBinSpan(
  edges: number[],
  first: number,
  last: number,
): string {
  const left = first === 0 ? "-inf" : fmt(edges[first - 1]);
  const unbounded = last === edges.length;
  const right = unbounded ? "+inf" : fmt(edges[last]);
  return `(${left}, ${right}${unbounded ? ")" : "]"}`;
}

function fmt(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-3)) {
    return v.toExponential(2);
  }
  return String(Math.round(v * 1000) / 1000);
}
