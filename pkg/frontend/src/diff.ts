/** Pixel-level comparison of two grids of equal shape. */

export interface GridDiff {
  /** true where the grids differ by more than eps */
  mask: boolean[][];
  changed: number;
  maxAbsDelta: number;
}

export function diffGrids(
  a: number[][],
  b: number[][],
  eps = 0,
): GridDiff {
  if (a.length !== b.length || (a[0]?.length ?? 0) !== (b[0]?.length ?? 0)) {
    throw new Error(
      `grid shapes differ: ${a.length}x${a[0]?.length ?? 0} vs ` +
        `${b.length}x${b[0]?.length ?? 0}`,
    );
  }
  const mask: boolean[][] = [];
  let changed = 0;
  let maxAbsDelta = 0;
  for (let r = 0; r < a.length; r++) {
    const row: boolean[] = new Array(a[r].length);
    for (let c = 0; c < a[r].length; c++) {
      const d = Math.abs(a[r][c] - b[r][c]);
      row[c] = d > eps;
      if (row[c]) changed++;
      if (d > maxAbsDelta) maxAbsDelta = d;
    }
    mask.push(row);
  }
  return { mask, changed, maxAbsDelta };
}

/** True when every differing pixel of `diff` lies inside `allowed`. */
export function changesWithin(diff: GridDiff, allowed: boolean[][]): boolean {
  for (let r = 0; r < diff.mask.length; r++) {
    for (let c = 0; c < diff.mask[r].length; c++) {
      if (diff.mask[r][c] && !allowed[r][c]) return false;
    }
  }
  return true;
}
