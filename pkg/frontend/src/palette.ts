/** Diverging red-blue palette for scores and score-like grids.
 *
 * Negative values shade toward red, positive toward blue, zero is white;
 * the convention every score plot and map panel in the app shares.
 */

const NEG = [178, 24, 43]; // deep red
const POS = [33, 102, 172]; // deep blue

/** Color for t in [-1, 1]; t is the value scaled by the panel maximum. */
export function divergingColor(t: number): string {
  const clamped = Math.max(-1, Math.min(1, t));
  const target = clamped < 0 ? NEG : POS;
  const a = Math.abs(clamped);
  const ch = target.map((c) => Math.round(255 + (c - 255) * a));
  return `rgb(${ch[0]}, ${ch[1]}, ${ch[2]})`;
}

/** Symmetric scale factor for a set of values: the largest magnitude. */
export function symmetricMax(values: Iterable<number>): number {
  let m = 0;
  for (const v of values) {
    const a = Math.abs(v);
    if (Number.isFinite(a) && a > m) m = a;
  }
  return m === 0 ? 1 : m;
}

/** Sequential gray-to-blue ramp for probabilities in [0, 1]. */
export function probabilityColor(p: number): string {
  const clamped = Math.max(0, Math.min(1, p));
  const from = [245, 245, 245];
  const to = [8, 48, 107];
  const ch = from.map((c, i) => Math.round(c + (to[i] - c) * clamped));
  return `rgb(${ch[0]}, ${ch[1]}, ${ch[2]})`;
}
