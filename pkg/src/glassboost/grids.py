"""Raster and tabular data model shared by every other module.

A :class:`ChannelGrid` is one physical channel on a regular 2D grid. A
:class:`Scene` groups channels (possibly at different resolutions) with an
optional binary label grid. A :class:`PixelTable` is the flat per-pixel view
that the model trains on.

Scenes are stored on disk as "bundles": a directory holding ``manifest.json``
plus one headerless little-endian float32 binary file per channel, row-major.
The format is language neutral and round-trips bit-exactly for values that are
representable in float32 (everything this package writes is).
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Binary channel files are little-endian float32, no header.
_CHANNEL_DTYPE = np.dtype("<f4")


def _as_readonly(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ChannelGrid:
    """One channel of raster data.

    Parameters
    ----------
    name : str
        Channel identifier, unique within a scene.
    values : ndarray
        2D float64 array, shape (rows, cols). Stored read-only.
    resolution_km : float
        Grid spacing in kilometers, > 0.
    units : str
        Free-text units (reflectance, kelvin, unitless score, ...).
    """

    name: str
    values: np.ndarray
    resolution_km: float
    units: str = ""

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise ValidationError(
                f"channel {self.name!r}: values must be 2D, got shape {vals.shape}"
            )
        if vals.size == 0:
            raise ValidationError(f"channel {self.name!r}: empty grid")
        if not (self.resolution_km > 0):
            raise ValidationError(
                f"channel {self.name!r}: resolution_km must be > 0, "
                f"got {self.resolution_km}"
            )
        object.__setattr__(self, "values", _as_readonly(vals))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, name: str | None = None,
                    resolution_km: float | None = None,
                    units: str | None = None) -> "ChannelGrid":
        """Copy of this grid with some fields replaced."""
        return ChannelGrid(
            name=self.name if name is None else name,
            values=values,
            resolution_km=self.resolution_km if resolution_km is None else resolution_km,
            units=self.units if units is None else units,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChannelGrid):
            return NotImplemented
        return (
            self.name == other.name
            and self.resolution_km == other.resolution_km
            and self.units == other.units
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )


@dataclass(frozen=True)
class Scene:
    """A collection of channels observed at one instant.

    Channels that share a resolution must share a shape; channels at different
    resolutions may coexist (fine visible next to coarse infrared) and only
    align after featurization.
    """

    scene_id: str
    timestamp: str
    channels: dict[str, ChannelGrid]
    labels: ChannelGrid | None = None
    solar_zenith_deg: float | None = None

    def __post_init__(self) -> None:
        if not self.channels:
            raise ValidationError(f"scene {self.scene_id!r}: no channels")
        by_res: dict[float, tuple[int, int]] = {}
        for name, grid in self.channels.items():
            if name != grid.name:
                raise ValidationError(
                    f"scene {self.scene_id!r}: channel key {name!r} does not "
                    f"match grid name {grid.name!r}"
                )
            shape = (grid.rows, grid.cols)
            seen = by_res.setdefault(grid.resolution_km, shape)
            if seen != shape:
                raise ValidationError(
                    f"scene {self.scene_id!r}: channels at {grid.resolution_km} km "
                    f"disagree on shape: {seen} vs {shape} ({name!r})"
                )
        if self.labels is not None:
            lab = self.labels.values
            if not np.all((lab == 0.0) | (lab == 1.0)):
                bad = lab[(lab != 0.0) & (lab != 1.0)]
                raise ValidationError(
                    f"scene {self.scene_id!r}: labels must be 0.0 or 1.0, "
                    f"found {bad.flat[0]!r}"
                )

    def channel(self, name: str) -> ChannelGrid:
        try:
            return self.channels[name]
        except KeyError:
            raise ValidationError(
                f"scene {self.scene_id!r}: missing channel {name!r}"
            ) from None


@dataclass
class PixelTable:
    """Per-pixel feature matrix with provenance.

    ``rows`` is (n, n_features) float64; ``targets`` is (n,) of {0, 1}.
    Provenance is stored compactly as parallel arrays; ``provenance(i)``
    reconstructs the (scene_id, row, col) triple for table row ``i``.
    """

    feature_names: list[str]
    rows: np.ndarray
    targets: np.ndarray
    scene_ids: list[str] = field(default_factory=list)
    scene_index: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    pixel_row: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    pixel_col: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))

    def __post_init__(self) -> None:
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        self.targets = np.ascontiguousarray(self.targets, dtype=np.int8)
        n, f = self.rows.shape
        if f != len(self.feature_names):
            raise ValidationError(
                f"table has {f} columns but {len(self.feature_names)} feature names"
            )
        if self.targets.shape != (n,):
            raise ValidationError("targets length does not match row count")
        if not np.all((self.targets == 0) | (self.targets == 1)):
            raise ValidationError("targets must be 0 or 1")

    def __len__(self) -> int:
        return self.rows.shape[0]

    def column(self, feature: str) -> np.ndarray:
        try:
            j = self.feature_names.index(feature)
        except ValueError:
            raise ValidationError(f"unknown feature {feature!r}") from None
        return self.rows[:, j]

    def provenance(self, i: int) -> tuple[str, int, int]:
        return (
            self.scene_ids[int(self.scene_index[i])],
            int(self.pixel_row[i]),
            int(self.pixel_col[i]),
        )


def flatten_scenes(scenes: list[Scene], feature_channels: list[str],
                   label_channel: str = "labels") -> PixelTable:
    """Stack per-pixel feature vectors from many scenes into one table.

    Row order is scene order, then row-major pixel order within each scene,
    so a group-by on provenance reconstructs every input grid exactly.

    Parameters
    ----------
    scenes : list of Scene
        Every scene must carry all ``feature_channels`` at one shared shape.
    feature_channels : list of str
        Channel names that become feature columns, in the given order.
    label_channel : str
        Name of the label channel; the literal name ``"labels"`` refers to
        the scene's label grid.

    Returns
    -------
    PixelTable
    """
    if not scenes:
        raise ValidationError("flatten_scenes: no scenes given")
    blocks = []
    targets = []
    scene_ids = []
    scene_index = []
    px_row = []
    px_col = []
    for si, scene in enumerate(scenes):
        grids = []
        shape = None
        for name in feature_channels:
            g = scene.channel(name)
            if shape is None:
                shape = (g.rows, g.cols)
            elif (g.rows, g.cols) != shape:
                raise ValidationError(
                    f"scene {scene.scene_id!r}: channel {name!r} shape "
                    f"{(g.rows, g.cols)} differs from {shape}"
                )
            grids.append(g.values.ravel())
        if label_channel == "labels":
            if scene.labels is None:
                raise ValidationError(
                    f"scene {scene.scene_id!r}: missing channel 'labels'"
                )
            lab = scene.labels
        else:
            lab = scene.channel(label_channel)
        if (lab.rows, lab.cols) != shape:
            raise ValidationError(
                f"scene {scene.scene_id!r}: label shape {(lab.rows, lab.cols)} "
                f"differs from feature shape {shape}"
            )
        blocks.append(np.column_stack(grids))
        targets.append(lab.values.ravel())
        scene_ids.append(scene.scene_id)
        n = shape[0] * shape[1]
        scene_index.append(np.full(n, si, np.int32))
        rr, cc = np.unravel_index(np.arange(n), shape)
        px_row.append(rr.astype(np.int32))
        px_col.append(cc.astype(np.int32))
    return PixelTable(
        feature_names=list(feature_channels),
        rows=np.vstack(blocks),
        targets=np.concatenate(targets),
        scene_ids=scene_ids,
        scene_index=np.concatenate(scene_index),
        pixel_row=np.concatenate(px_row),
        pixel_col=np.concatenate(px_col),
    )


def _safe_filename(name: str) -> str:
    # Channel names may contain characters that are awkward in filenames
    # (the 2D term separator ':' in particular).
    return re.sub(r"[^A-Za-z0-9._-]", "__", name)


def save_scene(scene: Scene, out_dir: str) -> str:
    """Write a scene bundle directory under ``out_dir`` and return its path.

    The bundle directory is named after the scene id (sanitized for the
    filesystem). Values are cast to little-endian float32 on disk; the
    manifest records shape, resolution, and the binary filename per channel.
    """
    path = os.path.join(os.fspath(out_dir), _safe_filename(scene.scene_id))
    os.makedirs(path, exist_ok=True)
    manifest: dict = {
        "scene_id": scene.scene_id,
        "timestamp": scene.timestamp,
        "channels": [],
    }
    if scene.solar_zenith_deg is not None:
        manifest["solar_zenith_deg"] = scene.solar_zenith_deg

    def entry(grid: ChannelGrid) -> dict:
        fname = _safe_filename(grid.name) + ".bin"
        grid.values.astype(_CHANNEL_DTYPE).tofile(os.path.join(path, fname))
        return {
            "name": grid.name,
            "rows": grid.rows,
            "cols": grid.cols,
            "resolution_km": grid.resolution_km,
            "units": grid.units,
            "file": fname,
        }

    for grid in scene.channels.values():
        manifest["channels"].append(entry(grid))
    if scene.labels is not None:
        manifest["labels"] = entry(scene.labels)
    tmp = os.path.join(path, "manifest.json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, os.path.join(path, "manifest.json"))
    return path


def _load_channel(path: str, entry: dict) -> ChannelGrid:
    for key in ("name", "rows", "cols", "resolution_km", "file"):
        if key not in entry:
            raise ValidationError(f"manifest channel entry missing {key!r}: {entry}")
    fpath = os.path.join(path, entry["file"])
    if not os.path.isfile(fpath):
        raise ValidationError(f"channel file not found: {fpath}")
    raw = np.fromfile(fpath, dtype=_CHANNEL_DTYPE)
    expected = int(entry["rows"]) * int(entry["cols"])
    if raw.size != expected:
        raise ValidationError(
            f"{fpath}: expected {expected} float32 values "
            f"({entry['rows']}x{entry['cols']}), found {raw.size}"
        )
    values = raw.astype(np.float64).reshape(int(entry["rows"]), int(entry["cols"]))
    return ChannelGrid(
        name=entry["name"],
        values=values,
        resolution_km=float(entry["resolution_km"]),
        units=entry.get("units", ""),
    )


def load_scene(path: str, impute: bool = False) -> Scene:
    """Load a scene bundle directory written by :func:`save_scene`.

    Parameters
    ----------
    path : str
        Bundle directory containing ``manifest.json``.
    impute : bool
        When True, NaN pixels are replaced by the channel mean of the finite
        pixels. When False (default) any NaN is a validation error.
    """
    mpath = os.path.join(path, "manifest.json")
    if not os.path.isfile(mpath):
        raise ValidationError(f"not a scene bundle (no manifest.json): {path}")
    with open(mpath, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{mpath}: malformed JSON at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}"
            ) from exc
    for key in ("scene_id", "timestamp", "channels"):
        if key not in manifest:
            raise ValidationError(f"{mpath}: manifest missing {key!r}")
    if not manifest["channels"]:
        raise ValidationError(f"{mpath}: bundle declares zero channels")

    def finish(grid: ChannelGrid) -> ChannelGrid:
        vals = grid.values
        mask = np.isnan(vals)
        if not mask.any():
            return grid
        if not impute:
            r, c = np.argwhere(mask)[0]
            raise ValidationError(
                f"channel {grid.name!r}: NaN at pixel ({r}, {c}); "
                f"pass impute=True to fill with the channel mean"
            )
        filled = vals.copy()
        finite = vals[~mask]
        filled[mask] = float(finite.mean()) if finite.size else 0.0
        return grid.with_values(filled)

    channels = {}
    for entry in manifest["channels"]:
        grid = finish(_load_channel(path, entry))
        channels[grid.name] = grid
    labels = None
    if "labels" in manifest:
        labels = finish(_load_channel(path, manifest["labels"]))
    sza = manifest.get("solar_zenith_deg")
    return Scene(
        scene_id=manifest["scene_id"],
        timestamp=manifest["timestamp"],
        channels=channels,
        labels=labels,
        solar_zenith_deg=None if sza is None else float(sza),
    )


def list_scene_bundles(root: str) -> list[str]:
    """Paths of all scene bundles directly under ``root``, sorted by name."""
    if not os.path.isdir(root):
        raise ValidationError(f"not a directory: {root}")
    out = []
    for name in sorted(os.listdir(root)):
        p = os.path.join(root, name)
        if os.path.isdir(p) and os.path.isfile(os.path.join(p, "manifest.json")):
            out.append(p)
    return out
