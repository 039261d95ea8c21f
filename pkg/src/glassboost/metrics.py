"""Pixel-wise confusion accounting and batch map emission.

Counts follow the standard forecast-verification quadrants: a hit when
prediction and label are both positive, a correct rejection when both are
negative, a false alarm for a positive prediction on a negative label, and a
miss for the reverse. Derived skill scores (POD, FAR, CSI) are reported with
explicit None when a denominator is zero.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grids import ChannelGrid, Scene, save_scene
from .model import AdditiveModel


@dataclass(frozen=True)
class ConfusionCounts:
    hits: int
    correct_rejections: int
    false_alarms: int
    misses: int

    def __post_init__(self) -> None:
        for name in ("hits", "correct_rejections", "false_alarms", "misses"):
            v = getattr(self, name)
            if v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v}")

    @property
    def total(self) -> int:
        return self.hits + self.correct_rejections + self.false_alarms + self.misses

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.hits + other.hits,
            self.correct_rejections + other.correct_rejections,
            self.false_alarms + other.false_alarms,
            self.misses + other.misses,
        )

    def to_dict(self) -> dict:
        return {
            "hits": self.hits,
            "correct_rejections": self.correct_rejections,
            "false_alarms": self.false_alarms,
            "misses": self.misses,
        }


def confusion(pred: ChannelGrid, labels: ChannelGrid,
              threshold: float = 0.5) -> ConfusionCounts:
    """Count confusion quadrants of a probability grid against binary labels.

    Predictions at or above ``threshold`` count as positive.
    """
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must be in (0, 1), got {threshold}")
    if (pred.rows, pred.cols) != (labels.rows, labels.cols):
        raise ValidationError(
            f"shape mismatch: predictions {(pred.rows, pred.cols)} vs "
            f"labels {(labels.rows, labels.cols)}"
        )
    lab = labels.values
    if not np.all((lab == 0.0) | (lab == 1.0)):
        raise ValidationError("labels must be strictly 0.0 or 1.0")
    pos = pred.values >= threshold
    truth = lab == 1.0
    counts = ConfusionCounts(
        hits=int(np.count_nonzero(pos & truth)),
        correct_rejections=int(np.count_nonzero(~pos & ~truth)),
        false_alarms=int(np.count_nonzero(pos & ~truth)),
        misses=int(np.count_nonzero(~pos & truth)),
    )
    # the four quadrants partition the grid; anything else is a counting bug
    if counts.total != pred.rows * pred.cols:
        raise RuntimeError(
            f"confusion counts sum to {counts.total}, expected "
            f"{pred.rows * pred.cols}"
        )
    return counts


def skill_scores(c: ConfusionCounts) -> dict:
    """POD, FAR, CSI, and base rate; None where the denominator is zero.

    These score agreement with the convection-proxy labels, not direct
    object-level detection quality.
    """
    def ratio(num: int, den: int) -> float | None:
        return num / den if den > 0 else None

    return {
        "POD": ratio(c.hits, c.hits + c.misses),
        "FAR": ratio(c.false_alarms, c.hits + c.false_alarms),
        "CSI": ratio(c.hits, c.hits + c.false_alarms + c.misses),
        "base_rate": ratio(c.hits + c.misses, c.total),
    }


def evaluate_scene(model: AdditiveModel, scene: Scene,
                   threshold: float = 0.5) -> ConfusionCounts:
    """Confusion counts of the model's predictions on one labeled scene."""
    if scene.labels is None:
        raise ValidationError(f"scene {scene.scene_id!r} has no labels")
    proba = model.predict_grid(scene.channels)
    return confusion(proba, scene.labels, threshold)


def emit_maps(model: AdditiveModel, scene: Scene, out_dir: str,
              threshold: float = 0.5, render: bool = False) -> str:
    """Write per-term importance, probability, and binary prediction grids.

    The grids are saved as one scene bundle under ``out_dir`` named after the
    scene, and the bundle path is returned; with ``render`` a PNG per channel
    is written next to it (requires matplotlib).
    """
    channels: dict[str, ChannelGrid] = {}
    for t in model.terms():
        g = model.importance_map(t.id, scene.channels)
        channels[g.name] = g
    proba = model.predict_grid(scene.channels)
    channels[proba.name] = proba
    binary = ChannelGrid(
        "prediction",
        (proba.values >= threshold).astype(np.float64),
        proba.resolution_km,
        "binary",
    )
    channels[binary.name] = binary
    out = Scene(
        scene_id=f"{scene.scene_id}-maps",
        timestamp=scene.timestamp,
        channels=channels,
        labels=scene.labels,
    )
    bundle = save_scene(out, out_dir)
    if render:
        _render_bundle(out, bundle)
    return bundle


def _render_bundle(scene: Scene, bundle_dir: str) -> None:
    # lazy import: rendering is an optional extra
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ValidationError(
            "rendering requires matplotlib (install the 'render' extra)"
        ) from exc
    for name, grid in scene.channels.items():
        fig, ax = plt.subplots(figsize=(5, 5))
        if name.startswith("importance"):
            bound = max(float(np.abs(grid.values).max()), 1e-9)
            im = ax.imshow(grid.values, cmap="RdBu", vmin=-bound, vmax=bound)
        else:
            im = ax.imshow(grid.values, cmap="viridis")
        ax.set_title(name)
        fig.colorbar(im, ax=ax, shrink=0.8)
        safe = name.replace(":", "__")
        fig.savefig(os.path.join(bundle_dir, f"{safe}.png"),
                    dpi=110, bbox_inches="tight")
        plt.close(fig)
