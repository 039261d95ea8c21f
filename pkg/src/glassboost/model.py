"""The editable glass-box model.

An :class:`AdditiveModel` is an intercept plus binned piecewise-constant
feature functions: 1D terms over single features and 2D terms over feature
pairs, combined through a logistic link. The prediction decomposes exactly
into per-term log-odds contributions, which is the whole point: every score
can be inspected, plotted, and edited.

Bin convention: K strictly increasing edges define K+1 bins
(-inf, e0], (e0, e1], ..., (e_{K-1}, +inf). Values equal to an edge fall in
the bin to its left, so "at or below threshold" edits are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ValidationError
from .grids import ChannelGrid

SCHEMA_VERSION = 1


def bin_index(edges: np.ndarray, x) -> np.ndarray:
    """Bin index of ``x`` under the right-closed convention."""
    return np.searchsorted(edges, x, side="left")


def _validate_edges(edges, what: str) -> np.ndarray:
    e = np.ascontiguousarray(edges, dtype=np.float64)
    if e.ndim != 1:
        raise ValidationError(f"{what}: edges must be 1D")
    if e.size and not np.all(np.isfinite(e)):
        raise ValidationError(f"{what}: edges must be finite")
    if e.size > 1 and not np.all(np.diff(e) > 0):
        raise ValidationError(f"{what}: edges must be strictly increasing")
    e.setflags(write=False)
    return e


def _readonly(a: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Term1D:
    """Feature function of one feature: per-bin log-odds scores.

    ``error_bars`` is either None (no uncertainty information) or an array
    with NaN exactly at edited bins; edited bins never carry error bars.
    """

    feature: str
    edges: np.ndarray
    scores: np.ndarray
    error_bars: np.ndarray | None = None
    edited_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        if ":" in self.feature:
            raise ValidationError(f"feature name may not contain ':': {self.feature!r}")
        edges = _validate_edges(self.edges, f"term {self.feature!r}")
        object.__setattr__(self, "edges", edges)
        nb = edges.size + 1
        scores = _readonly(self.scores, np.float64)
        if scores.shape != (nb,):
            raise ValidationError(
                f"term {self.feature!r}: {edges.size} edges require {nb} scores, "
                f"got shape {scores.shape}"
            )
        if not np.all(np.isfinite(scores)):
            raise ValidationError(f"term {self.feature!r}: scores must be finite")
        object.__setattr__(self, "scores", scores)
        mask = self.edited_mask
        mask = np.zeros(nb, bool) if mask is None else np.asarray(mask, bool)
        if mask.shape != (nb,):
            raise ValidationError(f"term {self.feature!r}: edited_mask shape mismatch")
        object.__setattr__(self, "edited_mask", _readonly(mask, bool))
        if self.error_bars is not None:
            eb = np.ascontiguousarray(self.error_bars, dtype=np.float64)
            if eb.shape != (nb,):
                raise ValidationError(f"term {self.feature!r}: error_bars shape mismatch")
            if not np.array_equal(np.isnan(eb), mask):
                raise ValidationError(
                    f"term {self.feature!r}: error bars must be absent exactly "
                    "at edited bins"
                )
            if np.any(eb[~np.isnan(eb)] < 0):
                raise ValidationError(f"term {self.feature!r}: error bars must be >= 0")
            eb.setflags(write=False)
            object.__setattr__(self, "error_bars", eb)

    @property
    def id(self) -> str:
        return self.feature

    @property
    def n_bins(self) -> int:
        return self.scores.size

    def lookup(self, x) -> np.ndarray:
        """Score of the bin containing each x (scalar or array)."""
        xv = np.asarray(x, dtype=np.float64)
        if np.isnan(xv).any():
            raise ValidationError(f"term {self.feature!r}: NaN input")
        return self.scores[bin_index(self.edges, xv)]


@dataclass(frozen=True)
class Term2D:
    """Interaction feature function over an ordered feature pair."""

    feature_x: str
    feature_y: str
    edges_x: np.ndarray
    edges_y: np.ndarray
    scores: np.ndarray
    edited_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        for f in (self.feature_x, self.feature_y):
            if ":" in f:
                raise ValidationError(f"feature name may not contain ':': {f!r}")
        if self.feature_x == self.feature_y:
            raise ValidationError(f"2D term pairs a feature with itself: {self.feature_x!r}")
        ex = _validate_edges(self.edges_x, f"term {self.id!r} x")
        ey = _validate_edges(self.edges_y, f"term {self.id!r} y")
        object.__setattr__(self, "edges_x", ex)
        object.__setattr__(self, "edges_y", ey)
        shape = (ex.size + 1, ey.size + 1)
        scores = _readonly(self.scores, np.float64)
        if scores.shape != shape:
            raise ValidationError(
                f"term {self.id!r}: scores shape {scores.shape} != {shape}"
            )
        if not np.all(np.isfinite(scores)):
            raise ValidationError(f"term {self.id!r}: scores must be finite")
        object.__setattr__(self, "scores", scores)
        mask = self.edited_mask
        mask = np.zeros(shape, bool) if mask is None else np.asarray(mask, bool)
        if mask.shape != shape:
            raise ValidationError(f"term {self.id!r}: edited_mask shape mismatch")
        object.__setattr__(self, "edited_mask", _readonly(mask, bool))

    @property
    def id(self) -> str:
        return f"{self.feature_x}:{self.feature_y}"

    def lookup(self, x, y) -> np.ndarray:
        xv = np.asarray(x, dtype=np.float64)
        yv = np.asarray(y, dtype=np.float64)
        if np.isnan(xv).any() or np.isnan(yv).any():
            raise ValidationError(f"term {self.id!r}: NaN input")
        return self.scores[bin_index(self.edges_x, xv), bin_index(self.edges_y, yv)]


@dataclass(frozen=True)
class AdditiveModel:
    """Intercept + 1D terms + 2D terms through a logistic link.

    Models are immutable values; training and editing both produce new
    instances. ``edit_log`` holds the serialized form of every edit applied
    since version 0, in application order.
    """

    intercept: float
    terms1d: tuple[Term1D, ...] = ()
    terms2d: tuple[Term2D, ...] = ()
    link: str = "logistic"
    feature_config_ref: str | None = None
    version: int = 0
    parent_version: int | None = None
    edit_log: tuple[dict, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.link != "logistic":
            raise ValidationError(f"unsupported link {self.link!r}")
        if not np.isfinite(self.intercept):
            raise ValidationError("intercept must be finite")
        object.__setattr__(self, "terms1d", tuple(self.terms1d))
        object.__setattr__(self, "terms2d", tuple(self.terms2d))
        object.__setattr__(self, "edit_log", tuple(self.edit_log))
        names = [t.feature for t in self.terms1d]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate 1D term features")
        known = set(names)
        pairs = set()
        for t in self.terms2d:
            if t.feature_x not in known or t.feature_y not in known:
                raise ValidationError(
                    f"2D term {t.id!r} references a feature without a 1D term"
                )
            key = frozenset((t.feature_x, t.feature_y))
            if key in pairs:
                raise ValidationError(f"duplicate 2D term pair {t.id!r}")
            pairs.add(key)
        if self.parent_version is not None and not self.version > self.parent_version:
            raise ValidationError(
                f"version {self.version} must exceed parent {self.parent_version}"
            )

    # -- term access -------------------------------------------------------

    @property
    def feature_names(self) -> list[str]:
        return [t.feature for t in self.terms1d]

    def terms(self) -> list[Term1D | Term2D]:
        return list(self.terms1d) + list(self.terms2d)

    def term(self, term_id: str) -> Term1D | Term2D:
        for t in self.terms():
            if t.id == term_id:
                return t
        raise ValidationError(f"unknown term {term_id!r}")

    # -- prediction --------------------------------------------------------

    def _columns(self, features: dict) -> dict[str, np.ndarray]:
        cols = {}
        for name in self.feature_names:
            if name not in features:
                raise ValidationError(f"missing feature {name!r}")
            cols[name] = np.asarray(features[name], dtype=np.float64)
        return cols

    def decompose(self, x: dict) -> tuple[float, list[tuple[str, float]]]:
        """Exact per-term breakdown of one input.

        Returns (intercept, [(term id, score), ...]) in model term order; the
        prediction is the sigmoid of their sum.
        """
        cols = self._columns(x)
        out: list[tuple[str, float]] = []
        for t in self.terms1d:
            out.append((t.id, float(t.lookup(cols[t.feature]))))
        for t in self.terms2d:
            out.append((t.id, float(t.lookup(cols[t.feature_x], cols[t.feature_y]))))
        return float(self.intercept), out

    def raw_score(self, features: dict) -> np.ndarray:
        """Additive log-odds score for scalar or array-valued feature maps."""
        cols = self._columns(features)
        total = None
        for t in self.terms1d:
            s = t.lookup(cols[t.feature])
            total = s.astype(np.float64) if total is None else total + s
        for t in self.terms2d:
            s = t.lookup(cols[t.feature_x], cols[t.feature_y])
            total = s.astype(np.float64) if total is None else total + s
        if total is None:
            shapes = [np.shape(v) for v in cols.values()]
            total = np.zeros(shapes[0] if shapes else ())
        return total + self.intercept

    def predict_proba(self, features: dict) -> np.ndarray:
        """Probability of the positive class; sigmoid of the additive score."""
        return expit(self.raw_score(features))

    def predict_grid(self, features: dict[str, ChannelGrid]) -> ChannelGrid:
        """Per-pixel probability over aligned feature grids."""
        grids = self._feature_grids(features)
        proba = self.predict_proba({k: g.values for k, g in grids.items()})
        ref = next(iter(grids.values()))
        return ChannelGrid("probability", proba, ref.resolution_km, "probability")

    def importance_map(self, term_id: str, features: dict[str, ChannelGrid]) -> ChannelGrid:
        """Per-pixel score contribution of one term."""
        t = self.term(term_id)
        grids = self._feature_grids(features)
        if isinstance(t, Term1D):
            vals = t.lookup(grids[t.feature].values)
            ref = grids[t.feature]
        else:
            vals = t.lookup(grids[t.feature_x].values, grids[t.feature_y].values)
            ref = grids[t.feature_x]
        return ChannelGrid(f"importance:{term_id}", vals, ref.resolution_km, "log-odds")

    def _feature_grids(self, features: dict[str, ChannelGrid]) -> dict[str, ChannelGrid]:
        grids = {}
        shape = None
        for name in self.feature_names:
            if name not in features:
                raise ValidationError(f"missing feature grid {name!r}")
            g = features[name]
            if shape is None:
                shape = (g.rows, g.cols)
            elif (g.rows, g.cols) != shape:
                raise ValidationError(
                    f"feature grid {name!r} shape {(g.rows, g.cols)} != {shape}"
                )
            grids[name] = g
        if not grids:
            raise ValidationError("model has no terms; supply at least one grid "
                                  "to define the output shape")
        return grids


# -- serialization ----------------------------------------------------------


def _floats(a: np.ndarray) -> list:
    return [float(v) for v in np.asarray(a).ravel()]


def _term1d_dict(t: Term1D) -> dict:
    if t.error_bars is None:
        eb = None
    else:
        eb = [None if np.isnan(v) else float(v) for v in t.error_bars]
    return {
        "feature": t.feature,
        "edges": _floats(t.edges),
        "scores": _floats(t.scores),
        "error_bars": eb,
        "edited_mask": [bool(v) for v in t.edited_mask],
    }


def _term2d_dict(t: Term2D) -> dict:
    return {
        "feature_x": t.feature_x,
        "feature_y": t.feature_y,
        "edges_x": _floats(t.edges_x),
        "edges_y": _floats(t.edges_y),
        "scores": [[float(v) for v in row] for row in t.scores],
        "edited_mask": [[bool(v) for v in row] for row in t.edited_mask],
    }


def model_to_dict(model: AdditiveModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "intercept": float(model.intercept),
        "link": model.link,
        "terms1d": [_term1d_dict(t) for t in model.terms1d],
        "terms2d": [_term2d_dict(t) for t in model.terms2d],
        "feature_config_ref": model.feature_config_ref,
        "version": model.version,
        "parent_version": model.parent_version,
        "edit_log": list(model.edit_log),
    }


def model_from_dict(d: dict) -> AdditiveModel:
    if not isinstance(d, dict) or "schema_version" not in d:
        raise ValidationError("not a model document (missing schema_version)")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported schema_version {d['schema_version']!r}; "
            f"this build reads version {SCHEMA_VERSION}"
        )
    terms1d = []
    for td in d.get("terms1d", []):
        eb = td.get("error_bars")
        if eb is not None:
            eb = np.array([np.nan if v is None else v for v in eb], dtype=np.float64)
        terms1d.append(Term1D(
            feature=td["feature"],
            edges=np.asarray(td["edges"], dtype=np.float64),
            scores=np.asarray(td["scores"], dtype=np.float64),
            error_bars=eb,
            edited_mask=np.asarray(td["edited_mask"], dtype=bool),
        ))
    terms2d = []
    for td in d.get("terms2d", []):
        terms2d.append(Term2D(
            feature_x=td["feature_x"],
            feature_y=td["feature_y"],
            edges_x=np.asarray(td["edges_x"], dtype=np.float64),
            edges_y=np.asarray(td["edges_y"], dtype=np.float64),
            scores=np.asarray(td["scores"], dtype=np.float64),
            edited_mask=np.asarray(td["edited_mask"], dtype=bool),
        ))
    return AdditiveModel(
        intercept=float(d["intercept"]),
        terms1d=tuple(terms1d),
        terms2d=tuple(terms2d),
        link=d.get("link", "logistic"),
        feature_config_ref=d.get("feature_config_ref"),
        version=int(d.get("version", 0)),
        parent_version=d.get("parent_version"),
        edit_log=tuple(d.get("edit_log", ())),
    )


def serialize(model: AdditiveModel) -> bytes:
    """Canonical JSON bytes; identical models serialize identically."""
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=True,
                      allow_nan=False)
    return (text + "\n").encode("utf-8")


def deserialize(data: bytes) -> AdditiveModel:
    try:
        d = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from exc
    return model_from_dict(d)


def save_model(model: AdditiveModel, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load_model(path: str) -> AdditiveModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
