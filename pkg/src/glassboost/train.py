"""Bagged cyclic gradient boosting of binned additive terms.

1D terms are fit first: every boosting round updates each feature's term once
(round-robin) with the best single histogram split of the current gradient,
scaled by a low learning rate. Several independent bags run on bootstrap
resamples; their per-bin score spread becomes the error bars. Pairwise
interaction terms are then detected on the residuals of the averaged 1D model
(coarse 2D histogram gain beyond the axis marginals), ranked, and the top
pairs are fit by cyclic depth-2 boosting on the same residuals.

Features are visited in sorted-name order everywhere, so the learned model is
invariant to the column order of the input table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit

from .errors import ValidationError
from .grids import PixelTable
from .model import AdditiveModel, Term1D, Term2D, bin_index

# Split gains below this are treated as zero (no update).
_MIN_GAIN = 1e-12
# Newton denominator guard and leaf value clip.
_LAMBDA = 1e-12
_LEAF_CLIP = 4.0
# A validation loss must improve by more than this to reset patience.
_LOSS_TOL = 1e-12


@dataclass
class TrainConfig:
    """Boosting hyperparameters.

    ``max_pairs`` may be an int, the string ``"all"``, or None, where None
    means all pairs when there are at most 4 features and 10 otherwise.
    """

    learning_rate: float = 0.01
    outer_bags: int = 8
    max_rounds: int = 5000
    early_stop_patience: int = 50
    max_bins_1d: int = 256
    max_bins_2d: int = 32
    max_pairs: int | str | None = None
    validation_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValidationError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.outer_bags < 1:
            raise ValidationError("outer_bags must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValidationError("validation_fraction must be in (0, 1)")
        if self.max_rounds < 1:
            raise ValidationError("max_rounds must be >= 1")
        if self.max_bins_1d < 2 or self.max_bins_2d < 2:
            raise ValidationError("bin limits must be >= 2")
        if isinstance(self.max_pairs, str) and self.max_pairs != "all":
            raise ValidationError(f"max_pairs must be an int, 'all', or null, got {self.max_pairs!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class BagReport:
    intercept: float
    rounds_run: int
    best_round: int
    best_val_loss: float
    train_losses: list[float] = field(default_factory=list)
    # per-feature score vector this bag contributed to the average
    scores: dict[str, list[float]] = field(default_factory=dict)


@dataclass
class TrainReport:
    config: dict
    feature_order: list[str]
    bags: list[BagReport]
    pair_ranking: list[dict]
    pairs_selected: list[str]
    pair_rounds: int = 0
    pair_best_val_loss: float | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "feature_order": self.feature_order,
            "bags": [asdict(b) for b in self.bags],
            "pair_ranking": self.pair_ranking,
            "pairs_selected": self.pairs_selected,
            "pair_rounds": self.pair_rounds,
            "pair_best_val_loss": self.pair_best_val_loss,
        }


def quantile_bins(values: np.ndarray, max_bins: int) -> np.ndarray:
    """Bin edges at quantile cuts over the sorted values.

    At most ``max_bins`` bins come back (``max_bins - 1`` edges). When the
    number of distinct values is max_bins or fewer, every distinct value gets
    its own bin with edges at the midpoints between neighbors. A constant
    input yields zero edges (one bin).
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValidationError("quantile_bins: empty input")
    if np.isnan(v).any():
        raise ValidationError("quantile_bins: NaN values")
    if max_bins < 2:
        raise ValidationError("max_bins must be >= 2")
    distinct = np.unique(v)
    if distinct.size == 1:
        return np.zeros(0, dtype=np.float64)
    if distinct.size <= max_bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    s = np.sort(v)
    cuts = [(k * v.size) // max_bins for k in range(1, max_bins)]
    edges = [(s[c - 1] + s[c]) / 2.0 for c in cuts]
    out = np.unique(np.asarray(edges, dtype=np.float64))
    # midpoints of equal neighbors collapse onto data values; keep edges
    # strictly increasing (np.unique already sorts and dedupes)
    return out


def _logloss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-(y * np.log(p) + (1.0 - y) * np.log1p(-p)).mean())


def _split_1d(G: np.ndarray, H: np.ndarray) -> tuple[int, float, float, float] | None:
    """Best single split of a gradient histogram.

    Returns (cut bin k, gain, left value, right value) for the split between
    bins k and k+1, or None when fewer than two bins exist. Ties go to the
    lowest k.
    """
    if G.size < 2:
        return None
    cG = np.cumsum(G)[:-1]
    cH = np.cumsum(H)[:-1]
    Gt = float(G.sum())
    Ht = float(H.sum())
    gains = (cG * cG / (cH + _LAMBDA)
             + (Gt - cG) ** 2 / (Ht - cH + _LAMBDA)
             - Gt * Gt / (Ht + _LAMBDA))
    k = int(np.argmax(gains))
    vl = float(np.clip(cG[k] / (cH[k] + _LAMBDA), -_LEAF_CLIP, _LEAF_CLIP))
    vr = float(np.clip((Gt - cG[k]) / (Ht - cH[k] + _LAMBDA), -_LEAF_CLIP, _LEAF_CLIP))
    return k, float(gains[k]), vl, vr


@dataclass
class _BagFit:
    intercept: float
    scores: dict[str, np.ndarray]
    report: BagReport


def _boost_bag(y: np.ndarray, bidx: dict[str, np.ndarray], nbins: dict[str, int],
               order: list[str], cfg: TrainConfig,
               rng: np.random.Generator) -> _BagFit:
    n = y.size
    perm = rng.permutation(n)
    n_val = max(1, math.ceil(cfg.validation_fraction * n))
    if n_val >= n:
        raise ValidationError("validation_fraction leaves no training rows")
    val = perm[:n_val]
    rest = perm[n_val:]
    boot = rest[rng.integers(0, rest.size, size=rest.size)]

    y_tr = y[boot].astype(np.float64)
    y_val = y[val].astype(np.float64)
    base = min(max(float(y_tr.mean()), 1e-12), 1.0 - 1e-12)
    intercept = math.log(base / (1.0 - base))

    tr_idx = {f: bidx[f][boot] for f in order}
    val_idx = {f: bidx[f][val] for f in order}
    scores = {f: np.zeros(nbins[f]) for f in order}
    F_tr = np.full(boot.size, intercept)
    F_val = np.full(n_val, intercept)

    best_val = math.inf
    best_scores = {f: s.copy() for f, s in scores.items()}
    best_round = 0
    since_improve = 0
    train_losses: list[float] = []
    rounds_run = 0

    for rnd in range(cfg.max_rounds):
        updated = False
        for f in order:
            p = expit(F_tr)
            g = y_tr - p
            h = p * (1.0 - p)
            G = np.bincount(tr_idx[f], weights=g, minlength=nbins[f])
            H = np.bincount(tr_idx[f], weights=h, minlength=nbins[f])
            split = _split_1d(G, H)
            if split is None or split[1] <= _MIN_GAIN:
                continue
            k, _, vl, vr = split
            dl = cfg.learning_rate * vl
            dr = cfg.learning_rate * vr
            scores[f][:k + 1] += dl
            scores[f][k + 1:] += dr
            F_tr += np.where(tr_idx[f] <= k, dl, dr)
            F_val += np.where(val_idx[f] <= k, dl, dr)
            updated = True
        rounds_run = rnd + 1
        train_losses.append(_logloss(y_tr, expit(F_tr)))
        val_loss = _logloss(y_val, expit(F_val))
        if val_loss < best_val - _LOSS_TOL:
            best_val = val_loss
            best_scores = {f: s.copy() for f, s in scores.items()}
            best_round = rounds_run
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= cfg.early_stop_patience:
                break
        if not updated:
            break
    return _BagFit(
        intercept=intercept,
        scores=best_scores,
        report=BagReport(
            intercept=intercept,
            rounds_run=rounds_run,
            best_round=best_round,
            best_val_loss=best_val,
            train_losses=train_losses,
            scores={f: best_scores[f].tolist() for f in order},
        ),
    )


def _best_marginal_split(G2: np.ndarray, H2: np.ndarray) -> tuple[int, int, float] | None:
    """Best axis-aligned split of a 2D gradient histogram.

    Returns (axis, cut index, gain); axis 0 wins ties. None when neither axis
    has two bins.
    """
    best: tuple[int, int, float] | None = None
    for axis in (0, 1):
        Gm = G2.sum(axis=1 - axis)
        Hm = H2.sum(axis=1 - axis)
        split = _split_1d(Gm, Hm)
        if split is None:
            continue
        k, gain = split[0], split[1]
        if best is None or gain > best[2]:
            best = (axis, k, gain)
    return best


def _axis_slice(axis: int, sl: slice) -> tuple:
    return (slice(None),) * axis + (sl,)


def _depth2_deltas(G2: np.ndarray, H2: np.ndarray) -> np.ndarray | None:
    """Per-cell Newton deltas of one depth-2 tree, or None without gain.

    The root splits on either axis; each side may split again on either axis,
    so the four leaves tile the bin grid in rectangles.
    """
    root = _best_marginal_split(G2, H2)
    if root is None or root[2] <= _MIN_GAIN:
        return None
    axis, k, _ = root
    delta = np.zeros_like(G2)
    sides = (_axis_slice(axis, slice(0, k + 1)), _axis_slice(axis, slice(k + 1, None)))
    for sl in sides:
        Gs = G2[sl]
        Hs = H2[sl]
        child = _best_marginal_split(Gs, Hs)
        if child is not None and child[2] > _MIN_GAIN:
            caxis, ck, _ = child
            for csl in (_axis_slice(caxis, slice(0, ck + 1)),
                        _axis_slice(caxis, slice(ck + 1, None))):
                g = float(Gs[csl].sum())
                h = float(Hs[csl].sum())
                delta[sl][csl] = np.clip(g / (h + _LAMBDA), -_LEAF_CLIP, _LEAF_CLIP)
        else:
            g = float(Gs.sum())
            h = float(Hs.sum())
            delta[sl] = np.clip(g / (h + _LAMBDA), -_LEAF_CLIP, _LEAF_CLIP)
    return delta


def rank_pairs(g: np.ndarray, h: np.ndarray, pair_idx: dict[str, np.ndarray],
               pair_nbins: dict[str, int], order: list[str]) -> list[tuple[str, str, float]]:
    """Interaction strength of every feature pair on fixed residuals.

    Strength is the Newton gain of per-cell constants on the coarse 2D
    histogram minus what the two axis marginals already explain; additive
    structure scores near zero, genuine interactions score high. Sorted by
    descending strength, then lexicographic pair names.
    """
    Gt = float(g.sum())
    Ht = float(h.sum())
    total_gain = Gt * Gt / (Ht + _LAMBDA)
    out = []
    for i, fx in enumerate(order):
        for fy in order[i + 1:]:
            nbx, nby = pair_nbins[fx], pair_nbins[fy]
            combined = pair_idx[fx].astype(np.int64) * nby + pair_idx[fy]
            G2 = np.bincount(combined, weights=g, minlength=nbx * nby).reshape(nbx, nby)
            H2 = np.bincount(combined, weights=h, minlength=nbx * nby).reshape(nbx, nby)
            cells = float((G2 * G2 / (H2 + _LAMBDA)).sum())
            Gx = G2.sum(axis=1)
            Hx = H2.sum(axis=1)
            Gy = G2.sum(axis=0)
            Hy = H2.sum(axis=0)
            rows = float((Gx * Gx / (Hx + _LAMBDA)).sum())
            cols = float((Gy * Gy / (Hy + _LAMBDA)).sum())
            strength = cells - rows - cols + total_gain
            out.append((fx, fy, strength))
    out.sort(key=lambda t: (-t[2], t[0], t[1]))
    return out


def _resolve_max_pairs(cfg: TrainConfig, n_features: int, n_candidates: int) -> int:
    if cfg.max_pairs == "all":
        return n_candidates
    if cfg.max_pairs is None:
        return n_candidates if n_features <= 4 else min(10, n_candidates)
    k = int(cfg.max_pairs)
    if k < 0:
        raise ValidationError("max_pairs must be >= 0")
    return min(k, n_candidates)


def _boost_pairs(y: np.ndarray, F_base: np.ndarray, selected: list[tuple[str, str]],
                 pair_idx: dict[str, np.ndarray], pair_nbins: dict[str, int],
                 cfg: TrainConfig, rng: np.random.Generator
                 ) -> tuple[dict[tuple[str, str], np.ndarray], int, float]:
    """Cyclic depth-2 boosting of the selected pair terms on residuals."""
    n = y.size
    perm = rng.permutation(n)
    n_val = max(1, math.ceil(cfg.validation_fraction * n))
    val = perm[:n_val]
    tr = perm[n_val:]
    y_tr = y[tr].astype(np.float64)
    y_val = y[val].astype(np.float64)
    F_tr = F_base[tr].copy()
    F_val = F_base[val].copy()

    shapes = {p: (pair_nbins[p[0]], pair_nbins[p[1]]) for p in selected}
    combined_tr = {}
    combined_val = {}
    for p in selected:
        fx, fy = p
        nby = pair_nbins[fy]
        combined_tr[p] = pair_idx[fx][tr].astype(np.int64) * nby + pair_idx[fy][tr]
        combined_val[p] = pair_idx[fx][val].astype(np.int64) * nby + pair_idx[fy][val]
    scores = {p: np.zeros(shapes[p]) for p in selected}

    best_val = _logloss(y_val, expit(F_val))
    best_scores = {p: s.copy() for p, s in scores.items()}
    best_round = 0
    since_improve = 0
    rounds_run = 0
    for rnd in range(cfg.max_rounds):
        updated = False
        for p in selected:
            nbx, nby = shapes[p]
            pcur = expit(F_tr)
            g = y_tr - pcur
            h = pcur * (1.0 - pcur)
            G2 = np.bincount(combined_tr[p], weights=g, minlength=nbx * nby).reshape(nbx, nby)
            H2 = np.bincount(combined_tr[p], weights=h, minlength=nbx * nby).reshape(nbx, nby)
            delta = _depth2_deltas(G2, H2)
            if delta is None:
                continue
            delta *= cfg.learning_rate
            scores[p] += delta
            flat = delta.ravel()
            F_tr += flat[combined_tr[p]]
            F_val += flat[combined_val[p]]
            updated = True
        rounds_run = rnd + 1
        val_loss = _logloss(y_val, expit(F_val))
        if val_loss < best_val - _LOSS_TOL:
            best_val = val_loss
            best_scores = {p: s.copy() for p, s in scores.items()}
            best_round = rounds_run
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= cfg.early_stop_patience:
                break
        if not updated:
            break
    return best_scores, best_round, best_val


def mean_center(model: AdditiveModel, bin_weights: dict[str, np.ndarray]) -> AdditiveModel:
    """Shift every term's population-weighted mean score to zero.

    The intercept absorbs the shifts, so predictions are unchanged.
    ``bin_weights`` maps term ids to per-bin population counts (2D arrays for
    pair terms). Terms without weights are left alone.
    """
    intercept = model.intercept
    terms1d = []
    for t in model.terms1d:
        w = bin_weights.get(t.id)
        if w is None or not np.sum(w) > 0:
            terms1d.append(t)
            continue
        w = np.asarray(w, dtype=np.float64)
        mu = float((t.scores * w).sum() / w.sum())
        intercept += mu
        terms1d.append(Term1D(t.feature, t.edges, t.scores - mu,
                              t.error_bars, t.edited_mask))
    terms2d = []
    for t in model.terms2d:
        w = bin_weights.get(t.id)
        if w is None or not np.sum(w) > 0:
            terms2d.append(t)
            continue
        w = np.asarray(w, dtype=np.float64)
        mu = float((t.scores * w).sum() / w.sum())
        intercept += mu
        terms2d.append(Term2D(t.feature_x, t.feature_y, t.edges_x, t.edges_y,
                              t.scores - mu, t.edited_mask))
    return AdditiveModel(
        intercept=intercept,
        terms1d=tuple(terms1d),
        terms2d=tuple(terms2d),
        link=model.link,
        feature_config_ref=model.feature_config_ref,
        version=model.version,
        parent_version=model.parent_version,
        edit_log=model.edit_log,
    )


def train_with_report(table: PixelTable, cfg: TrainConfig,
                      feature_config_ref: str | None = None
                      ) -> tuple[AdditiveModel, TrainReport]:
    """Fit an additive model and return it with the training report."""
    if len(table) == 0:
        raise ValidationError("empty training table")
    y = table.targets.astype(np.float64)
    pos = int(table.targets.sum())
    if pos == 0 or pos == len(table):
        raise ValidationError(
            f"training targets are single-class ({pos} of {len(table)} positive); "
            "both classes are required"
        )
    if np.isnan(table.rows).any():
        raise ValidationError("training features contain NaN")

    order = sorted(table.feature_names)
    edges: dict[str, np.ndarray] = {}
    bidx: dict[str, np.ndarray] = {}
    nbins: dict[str, int] = {}
    for f in order:
        col = table.column(f)
        e = quantile_bins(col, cfg.max_bins_1d)
        edges[f] = e
        bidx[f] = bin_index(e, col).astype(np.int32)
        nbins[f] = e.size + 1

    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.outer_bags + 1)
    bags = [
        _boost_bag(y, bidx, nbins, order, cfg, np.random.default_rng(streams[b]))
        for b in range(cfg.outer_bags)
    ]

    intercept = float(np.mean([b.intercept for b in bags]))
    mean_scores = {}
    error_bars = {}
    for f in order:
        stack = np.stack([b.scores[f] for b in bags])
        mean_scores[f] = stack.mean(axis=0)
        error_bars[f] = stack.std(axis=0, ddof=0)

    # residual base: averaged 1D model applied to the full table
    F_full = np.full(len(table), intercept)
    for f in order:
        F_full += mean_scores[f][bidx[f]]

    # coarse axes shared by pair detection and pair terms
    pair_edges = {f: quantile_bins(table.column(f), cfg.max_bins_2d) for f in order}
    pair_idx = {f: bin_index(pair_edges[f], table.column(f)).astype(np.int32)
                for f in order}
    pair_nbins = {f: pair_edges[f].size + 1 for f in order}

    p_full = expit(F_full)
    ranking = rank_pairs(y - p_full, p_full * (1.0 - p_full),
                         pair_idx, pair_nbins, order)
    n_pairs = _resolve_max_pairs(cfg, len(order), len(ranking))
    selected = [(fx, fy) for fx, fy, _ in ranking[:n_pairs]]

    pair_scores: dict[tuple[str, str], np.ndarray] = {}
    pair_rounds = 0
    pair_val: float | None = None
    if selected:
        pair_scores, pair_rounds, pair_val = _boost_pairs(
            y, F_full, selected, pair_idx, pair_nbins, cfg,
            np.random.default_rng(streams[-1]),
        )

    terms1d = tuple(
        Term1D(feature=f, edges=edges[f], scores=mean_scores[f],
               error_bars=error_bars[f])
        for f in order
    )
    terms2d = tuple(
        Term2D(feature_x=fx, feature_y=fy, edges_x=pair_edges[fx],
               edges_y=pair_edges[fy], scores=pair_scores[(fx, fy)])
        for fx, fy in selected
    )
    model = AdditiveModel(
        intercept=intercept,
        terms1d=terms1d,
        terms2d=terms2d,
        feature_config_ref=feature_config_ref,
    )

    weights: dict[str, np.ndarray] = {
        f: np.bincount(bidx[f], minlength=nbins[f]).astype(np.float64)
        for f in order
    }
    for fx, fy in selected:
        nbx, nby = pair_nbins[fx], pair_nbins[fy]
        combined = pair_idx[fx].astype(np.int64) * nby + pair_idx[fy]
        weights[f"{fx}:{fy}"] = np.bincount(
            combined, minlength=nbx * nby
        ).astype(np.float64).reshape(nbx, nby)
    model = mean_center(model, weights)

    report = TrainReport(
        config=cfg.to_dict(),
        feature_order=order,
        bags=[b.report for b in bags],
        pair_ranking=[{"pair": f"{fx}:{fy}", "strength": s} for fx, fy, s in ranking],
        pairs_selected=[f"{fx}:{fy}" for fx, fy in selected],
        pair_rounds=pair_rounds,
        pair_best_val_loss=pair_val,
    )
    return model, report


def fit(table: PixelTable, cfg: TrainConfig,
        feature_config_ref: str | None = None) -> AdditiveModel:
    """Fit an additive model; see :func:`train_with_report` for the report."""
    model, _ = train_with_report(table, cfg, feature_config_ref)
    return model


def fit_pairs(table: PixelTable, model: AdditiveModel, cfg: TrainConfig,
              seed: int | None = None) -> list[Term2D]:
    """Detect, rank, and fit pair terms on the residuals of a 1D model.

    Standalone entry point mirroring the pair stage of :func:`fit`; useful
    for adding interactions to an existing main-effects model.
    """
    if model.terms2d:
        raise ValidationError("model already has pair terms")
    y = table.targets.astype(np.float64)
    order = sorted(table.feature_names)
    cols = {f: table.column(f) for f in order}
    F_full = model.raw_score(cols)
    pair_edges = {f: quantile_bins(cols[f], cfg.max_bins_2d) for f in order}
    pair_idx = {f: bin_index(pair_edges[f], cols[f]).astype(np.int32) for f in order}
    pair_nbins = {f: pair_edges[f].size + 1 for f in order}
    p_full = expit(F_full)
    ranking = rank_pairs(y - p_full, p_full * (1.0 - p_full),
                         pair_idx, pair_nbins, order)
    n_pairs = _resolve_max_pairs(cfg, len(order), len(ranking))
    selected = [(fx, fy) for fx, fy, _ in ranking[:n_pairs]]
    if not selected:
        return []
    rng = np.random.default_rng(
        np.random.SeedSequence(cfg.seed if seed is None else seed).spawn(1)[0]
    )
    pair_scores, _, _ = _boost_pairs(y, F_full, selected, pair_idx, pair_nbins,
                                     cfg, rng)
    return [
        Term2D(feature_x=fx, feature_y=fy, edges_x=pair_edges[fx],
               edges_y=pair_edges[fy], scores=pair_scores[(fx, fy)])
        for fx, fy in selected
    ]
