"""Direct edits to learned feature functions, with full provenance.

An edit targets the bins of one term whose intervals intersect a feature-value
range (ranges snap to bin boundaries; there is no partial-bin splitting).
Flattening, scaling, shifting, and setting values never touch other bins or
other terms, and every applied op lands in the model's edit log so any version
can be reproduced by replay.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import AdditiveModel, Term1D, Term2D

EDIT_KINDS = ("flatten_range", "scale", "shift", "set_value")

# Score differences at or below this are treated as equal by diff().
DIFF_TOL = 1e-12


@dataclass
class EditOp:
    """One edit to one term.

    ``range`` is [lo, hi] for 1D terms, [[lo_x, hi_x], [lo_y, hi_y]] for 2D
    terms, or None for the whole domain. Kind-specific fields: ``factor``
    (scale), ``delta`` (shift), ``value`` (set_value, or flatten_range where
    the string "min_in_range" means the lowest current score among affected
    bins). ``applied_at`` is carried verbatim; replaying a log therefore
    reproduces a model byte-exactly.
    """

    kind: str
    term: str
    range: Sequence | None = None
    factor: float | None = None
    delta: float | None = None
    value: float | str | None = None
    author: str = ""
    note: str = ""
    applied_at: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in EDIT_KINDS:
            raise ValidationError(
                f"unknown edit kind {self.kind!r}; expected one of {EDIT_KINDS}"
            )
        if self.kind == "scale":
            if self.factor is None or not np.isfinite(self.factor):
                raise ValidationError("scale edit requires a finite factor")
        elif self.kind == "shift":
            if self.delta is None or not np.isfinite(self.delta):
                raise ValidationError("shift edit requires a finite delta")
        elif self.kind == "flatten_range":
            if self.value is None:
                raise ValidationError(
                    "flatten_range requires value: a float or \"min_in_range\""
                )
            if isinstance(self.value, str) and self.value != "min_in_range":
                raise ValidationError(
                    f"flatten_range value must be a float or \"min_in_range\", "
                    f"got {self.value!r}"
                )
            if not isinstance(self.value, str) and not np.isfinite(self.value):
                raise ValidationError("flatten_range value must be finite")
        elif self.kind == "set_value":
            if self.value is None or isinstance(self.value, str) \
                    or not np.isfinite(self.value):
                raise ValidationError("set_value edit requires a finite value")
        if self.range is not None:
            rng = self.range
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise ValidationError(
                    f"range must be [lo, hi] or [[lo, hi], [lo, hi]], "
                    f"got {rng!r}"
                )
            if all(isinstance(part, (list, tuple)) for part in rng):
                for part in rng:
                    _parse_interval(part, f"edit on {self.term!r}")
            else:
                _parse_interval(rng, f"edit on {self.term!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EditOp":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown edit op keys: {sorted(unknown)}")
        if "kind" not in d or "term" not in d:
            raise ValidationError("edit op requires 'kind' and 'term'")
        return cls(**d)


def _parse_interval(rng, what: str) -> tuple[float, float]:
    if rng is None:
        return -np.inf, np.inf
    if len(rng) != 2:
        raise ValidationError(f"{what}: interval must be [lo, hi], got {rng!r}")
    lo = -np.inf if rng[0] is None else float(rng[0])
    hi = np.inf if rng[1] is None else float(rng[1])
    if np.isnan(lo) or np.isnan(hi):
        raise ValidationError(f"{what}: interval endpoints may not be NaN")
    if lo > hi:
        raise ValidationError(f"{what}: empty interval [{lo}, {hi}]")
    return lo, hi


def affected_bins(edges: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Boolean mask of bins whose interval intersects [lo, hi].

    Bin i spans (left_i, right_i] with unbounded end bins; it is affected
    when hi > left_i and right_i >= lo.
    """
    lefts = np.concatenate(([-np.inf], edges))
    rights = np.concatenate((edges, [np.inf]))
    return (hi > lefts) & (rights >= lo)


def _edit_scores(scores: np.ndarray, mask: np.ndarray, op: EditOp) -> np.ndarray:
    out = scores.copy()
    if op.kind == "flatten_range":
        if op.value == "min_in_range":
            target = float(out[mask].min())
        else:
            target = float(op.value)
        out[mask] = target
    elif op.kind == "scale":
        out[mask] = out[mask] * float(op.factor)
    elif op.kind == "shift":
        out[mask] = out[mask] + float(op.delta)
    else:  # set_value
        out[mask] = float(op.value)
    return out


def apply_edit(model: AdditiveModel, op: EditOp) -> AdditiveModel:
    """Apply one edit, producing the next model version.

    Affected bins get the new score, edited_mask set, and (1D) error bars
    removed; every other bin and term is bit-identical. The input model is
    not modified.
    """
    target = model.term(op.term)  # raises on unknown term
    terms1d = list(model.terms1d)
    terms2d = list(model.terms2d)
    if isinstance(target, Term1D):
        if op.range is not None and len(op.range) == 2 \
                and any(isinstance(v, (list, tuple)) for v in op.range):
            raise ValidationError(
                f"term {op.term!r} is 1D but the edit range is a rectangle"
            )
        lo, hi = _parse_interval(op.range, f"edit on {op.term!r}")
        mask = affected_bins(target.edges, lo, hi)
        if not mask.any():
            raise ValidationError(
                f"edit range [{lo}, {hi}] overlaps no bins of term {op.term!r}"
            )
        new_scores = _edit_scores(target.scores, mask, op)
        new_mask = target.edited_mask | mask
        if target.error_bars is None:
            new_bars = None
        else:
            new_bars = target.error_bars.copy()
            new_bars[new_mask] = np.nan
        new_term = Term1D(target.feature, target.edges, new_scores,
                          new_bars, new_mask)
        terms1d[terms1d.index(target)] = new_term
    else:
        if op.range is None:
            rx, ry = None, None
        else:
            if len(op.range) != 2 or not all(
                    v is None or isinstance(v, (list, tuple)) for v in op.range):
                raise ValidationError(
                    f"term {op.term!r} is 2D; the edit range must be "
                    "[[lo_x, hi_x], [lo_y, hi_y]]"
                )
            rx, ry = op.range
        lox, hix = _parse_interval(rx, f"edit on {op.term!r} x")
        loy, hiy = _parse_interval(ry, f"edit on {op.term!r} y")
        mx = affected_bins(target.edges_x, lox, hix)
        my = affected_bins(target.edges_y, loy, hiy)
        mask = np.outer(mx, my)
        if not mask.any():
            raise ValidationError(
                f"edit range overlaps no bins of term {op.term!r}"
            )
        new_scores = _edit_scores(target.scores, mask, op)
        new_term = Term2D(target.feature_x, target.feature_y,
                          target.edges_x, target.edges_y, new_scores,
                          target.edited_mask | mask)
        terms2d[terms2d.index(target)] = new_term
    return AdditiveModel(
        intercept=model.intercept,
        terms1d=tuple(terms1d),
        terms2d=tuple(terms2d),
        link=model.link,
        feature_config_ref=model.feature_config_ref,
        version=model.version + 1,
        parent_version=model.version,
        edit_log=model.edit_log + (op.to_dict(),),
    )


def apply_edits(model: AdditiveModel, ops: Sequence[EditOp]) -> AdditiveModel:
    """Apply ops in order; each one advances the version by one."""
    for op in ops:
        model = apply_edit(model, op)
    return model


def replay(ancestor: AdditiveModel, edit_log: Sequence[dict]) -> AdditiveModel:
    """Reproduce a descendant model by replaying its edit log.

    ``edit_log`` is the descendant's full log; the ops already present in the
    ancestor's own log are skipped.
    """
    done = len(ancestor.edit_log)
    if tuple(edit_log[:done]) != ancestor.edit_log:
        raise ValidationError("edit log does not extend the ancestor's log")
    return apply_edits(ancestor, [EditOp.from_dict(d) for d in edit_log[done:]])


def diff(model_a: AdditiveModel, model_b: AdditiveModel) -> dict[str, list]:
    """Bins whose scores differ beyond tolerance, per term.

    Returns {term id: [(bin index, score_a, score_b), ...]}; bin indexes are
    ints for 1D terms and (i, j) tuples for 2D terms. Requires identical term
    structure and bin edges.
    """
    terms_a = {t.id: t for t in model_a.terms()}
    terms_b = {t.id: t for t in model_b.terms()}
    if set(terms_a) != set(terms_b):
        raise ValidationError(
            f"term sets differ: {sorted(set(terms_a) ^ set(terms_b))}"
        )
    out: dict[str, list] = {}
    for tid in terms_a:
        ta, tb = terms_a[tid], terms_b[tid]
        if isinstance(ta, Term1D) != isinstance(tb, Term1D):
            raise ValidationError(f"term {tid!r} is 1D in one model, 2D in the other")
        if isinstance(ta, Term1D):
            if not np.array_equal(ta.edges, tb.edges):
                raise ValidationError(f"term {tid!r}: bin edges differ")
            idx = np.nonzero(np.abs(ta.scores - tb.scores) > DIFF_TOL)[0]
            entries = [(int(i), float(ta.scores[i]), float(tb.scores[i]))
                       for i in idx]
        else:
            if not np.array_equal(ta.edges_x, tb.edges_x) \
                    or not np.array_equal(ta.edges_y, tb.edges_y):
                raise ValidationError(f"term {tid!r}: bin edges differ")
            ii, jj = np.nonzero(np.abs(ta.scores - tb.scores) > DIFF_TOL)
            entries = [((int(i), int(j)), float(ta.scores[i, j]),
                        float(tb.scores[i, j])) for i, j in zip(ii, jj)]
        if entries:
            out[tid] = entries
    return out
