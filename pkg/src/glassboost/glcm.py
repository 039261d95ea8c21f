"""Gray-level co-occurrence matrices and the contrast texture statistic.

Co-occurrence is counted over the 8-connected distance-1 neighborhood inside a
tile: every ordered (pixel, neighbor) pair across the four axis/diagonal
directions, both orders, pooled into one count matrix and normalized to sum 1.
Counting both orders makes the matrix symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Ordered pair count for a TxT tile over 8 neighbors:
# 2*T*(T-1) horizontal + 2*T*(T-1) vertical + 2*(T-1)^2 per diagonal
# = 4*(T-1)*(2T-1). T=4 gives 84.
_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))


@dataclass(frozen=True)
class GlcmMatrix:
    """Normalized co-occurrence counts for one tile.

    ``p[i, j]`` is the fraction of ordered neighbor pairs whose gray levels
    are (i, j). Entries sum to 1 and the matrix is symmetric.
    """

    levels: int
    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64)
        if p.shape != (self.levels, self.levels):
            raise ValidationError(
                f"GLCM shape {p.shape} does not match levels {self.levels}"
            )
        p = np.ascontiguousarray(p)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


def ordered_pair_count(tile_rows: int, tile_cols: int) -> int:
    """Number of ordered 8-neighbor pairs fully inside a tile."""
    r, c = tile_rows, tile_cols
    horizontal = 2 * r * (c - 1)
    vertical = 2 * (r - 1) * c
    diagonal = 4 * (r - 1) * (c - 1)
    return horizontal + vertical + diagonal


def compute_glcm(tile: np.ndarray, levels: int) -> GlcmMatrix:
    """Co-occurrence matrix of one quantized tile.

    Parameters
    ----------
    tile : ndarray
        2D integer array of gray levels in [0, levels).
    levels : int
        Number of gray levels N.
    """
    t = np.asarray(tile)
    if t.ndim != 2 or t.shape[0] < 2 or t.shape[1] < 2:
        raise ValidationError(
            f"tile must be at least 2x2 to contain neighbor pairs, got {t.shape}"
        )
    if not np.issubdtype(t.dtype, np.integer):
        raise ValidationError("tile must hold integer gray levels; quantize first")
    if t.min() < 0 or t.max() >= levels:
        raise ValidationError(
            f"gray levels must lie in [0, {levels}), found range "
            f"[{t.min()}, {t.max()}]"
        )
    counts = np.zeros(levels * levels, dtype=np.int64)
    for dr, dc in _DIRECTIONS:
        a = t[max(0, -dr):t.shape[0] - max(0, dr),
              max(0, -dc):t.shape[1] - max(0, dc)]
        b = t[max(0, dr):t.shape[0] + min(0, dr),
              max(0, dc):t.shape[1] + min(0, dc)]
        pairs = a.ravel().astype(np.int64) * levels + b.ravel()
        counts += np.bincount(pairs, minlength=levels * levels)
        # opposite direction: same pairs with roles swapped
        pairs = b.ravel().astype(np.int64) * levels + a.ravel()
        counts += np.bincount(pairs, minlength=levels * levels)
    total = counts.sum()
    return GlcmMatrix(levels=levels, p=counts.reshape(levels, levels) / total)


def contrast(glcm: GlcmMatrix) -> float:
    """Contrast statistic: sum over (i, j) of p(i, j) * (i - j)^2.

    Zero exactly when all mass sits on the diagonal (constant tile).
    """
    idx = np.arange(glcm.levels, dtype=np.float64)
    w = (idx[:, None] - idx[None, :]) ** 2
    return float((glcm.p * w).sum())


def quantize(values: np.ndarray, levels: int, lo: float, hi: float) -> np.ndarray:
    """Map floats to integer gray levels in [0, levels).

    v -> floor(clip((v - lo) / (hi - lo), 0, 1 - eps) * levels). Values at or
    below ``lo`` map to 0, values at or above ``hi`` map to levels - 1.
    """
    if not lo < hi:
        raise ValidationError(f"quantize: need lo < hi, got {lo} >= {hi}")
    v = np.asarray(values, dtype=np.float64)
    t = (v - lo) / (hi - lo)
    eps = np.finfo(np.float64).eps
    return np.floor(np.clip(t, 0.0, 1.0 - eps) * levels).astype(np.int32)


def contrast_tiles(quantized: np.ndarray, tile: int) -> np.ndarray:
    """Contrast of every non-overlapping tile x tile block at once.

    Equivalent to carving the grid into blocks and applying
    ``contrast(compute_glcm(block))`` to each, but vectorized. Exploits the
    identity contrast == mean over ordered pairs of (level_a - level_b)^2,
    which holds because pooled counting weights every pair equally.
    """
    q = np.asarray(quantized)
    if q.ndim != 2:
        raise ValidationError("quantized grid must be 2D")
    if tile < 2:
        raise ValidationError(f"tile must be >= 2, got {tile}")
    rows, cols = q.shape
    if rows % tile or cols % tile:
        raise ValidationError(
            f"tile {tile} does not divide grid shape {q.shape}"
        )
    nr, nc = rows // tile, cols // tile
    blocks = q.reshape(nr, tile, nc, tile).transpose(0, 2, 1, 3).astype(np.int64)
    ss = np.zeros((nr, nc), dtype=np.float64)
    for dr, dc in _DIRECTIONS:
        a = blocks[:, :, max(0, -dr):tile - max(0, dr),
                   max(0, -dc):tile - max(0, dc)]
        b = blocks[:, :, max(0, dr):tile + min(0, dr),
                   max(0, dc):tile + min(0, dc)]
        d = a - b
        ss += (d * d).sum(axis=(-2, -1))
    # each unordered pair counted once above, twice in the ordered total
    return 2.0 * ss / ordered_pair_count(tile, tile)
