"""Engineered model inputs: brightness, cool-contrast texture, infrared.

Three features are derived per scene, all on the coarse (infrared) grid:

* ``brightness``: box-blurred visible reflectance, nearest-neighbor
  downsampled from the fine grid.
* ``cool_contrast``: per-tile GLCM contrast of the visible channel,
  log-compressed and max-normalized to [0, 1], then zeroed wherever the
  infrared temperature is above the cold threshold.
* ``infrared``: the infrared channel passed through unchanged.

Binary convective labels are derived from a categorical precipitation-type
grid combined with the same cold threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import StateError, ValidationError
from .glcm import contrast_tiles, quantize
from .grids import ChannelGrid, Scene

logger = logging.getLogger(__name__)

# Precipitation-type category codes. 0 is the no-precipitation background;
# 1..7 are the seven surface precipitation categories.
PRECIP_CATEGORIES: dict[int, str] = {
    0: "none",
    1: "warm_stratiform_rain",
    2: "snow",
    3: "convection",
    4: "hail",
    5: "cool_stratiform_rain",
    6: "tropical_stratiform_rain",
    7: "tropical_convective_rain",
}
# Categories that count as convective for labeling.
CONVECTIVE_CODES = frozenset({3, 4, 7})

FEATURE_NAMES = ["brightness", "cool_contrast", "infrared"]


@dataclass
class FeatureConfig:
    """Parameters of the feature pipeline.

    ``contrast_norm_max`` is fit on training data (largest raw tile contrast
    seen) and must be set before cool-contrast features can be produced.
    """

    blur_window: int = 9
    downsample_factor: int = 4
    glcm_tile: int = 4
    glcm_levels: int = 16
    cold_threshold_K: float = 250.0
    contrast_norm_max: float | None = None
    sza_cutoff_deg: float = 65.0
    # quantization range for visible reflectance gray levels
    quantize_lo: float = 0.0
    quantize_hi: float = 1.0

    def __post_init__(self) -> None:
        if self.blur_window < 1 or self.blur_window % 2 == 0:
            raise ValidationError(
                f"blur_window must be odd and >= 1, got {self.blur_window}"
            )
        if self.downsample_factor < 1:
            raise ValidationError("downsample_factor must be >= 1")
        if self.glcm_tile < 2:
            raise ValidationError("glcm_tile must be >= 2")
        if self.glcm_levels < 2:
            raise ValidationError("glcm_levels must be >= 2")
        if self.contrast_norm_max is not None and not self.contrast_norm_max > 0:
            raise ValidationError(
                f"contrast_norm_max must be > 0 once fit, got {self.contrast_norm_max}"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown feature config keys: {sorted(unknown)}")
        return cls(**d)


def box_blur(grid: ChannelGrid, window: int) -> ChannelGrid:
    """Mean filter with a square window and clamp-to-edge padding.

    Parameters
    ----------
    grid : ChannelGrid
    window : int
        Odd window size, at most min(rows, cols).
    """
    if window % 2 == 0 or window < 1:
        raise ValidationError(f"blur window must be odd and >= 1, got {window}")
    if window > min(grid.rows, grid.cols):
        raise ValidationError(
            f"blur window {window} exceeds grid shape {(grid.rows, grid.cols)}"
        )
    if window == 1:
        return grid
    half = window // 2
    padded = np.pad(grid.values, half, mode="edge")
    out = sliding_window_view(padded, (window, window)).mean(axis=(-2, -1))
    return grid.with_values(out)


def downsample_nn(grid: ChannelGrid, factor: int) -> ChannelGrid:
    """Nearest-neighbor downsample keeping the top-left pixel of each block."""
    if factor < 1:
        raise ValidationError(f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return grid
    if grid.rows % factor or grid.cols % factor:
        raise ValidationError(
            f"factor {factor} does not divide grid shape {(grid.rows, grid.cols)}"
        )
    return grid.with_values(
        grid.values[::factor, ::factor],
        resolution_km=grid.resolution_km * factor,
    )


def brightness_feature(visible: ChannelGrid, cfg: FeatureConfig) -> ChannelGrid:
    """Blurred, downsampled visible reflectance on the coarse grid."""
    blurred = box_blur(visible, cfg.blur_window)
    coarse = downsample_nn(blurred, cfg.downsample_factor)
    return coarse.with_values(coarse.values, name="brightness")


def raw_contrast_grid(visible: ChannelGrid, cfg: FeatureConfig) -> np.ndarray:
    """Unnormalized per-tile contrast of the visible channel."""
    if visible.rows % cfg.glcm_tile or visible.cols % cfg.glcm_tile:
        raise ValidationError(
            f"glcm_tile {cfg.glcm_tile} does not divide visible shape "
            f"{(visible.rows, visible.cols)}"
        )
    q = quantize(visible.values, cfg.glcm_levels, cfg.quantize_lo, cfg.quantize_hi)
    return contrast_tiles(q, cfg.glcm_tile)


def cool_contrast_feature(visible: ChannelGrid, infrared: ChannelGrid,
                          cfg: FeatureConfig) -> ChannelGrid:
    """Normalized tile contrast, kept only where the scene is cold.

    Each output pixel covers one glcm_tile x glcm_tile block of the visible
    grid. The raw contrast c becomes log(1 + c) / log(1 + contrast_norm_max),
    clipped to [0, 1]; pixels whose infrared temperature is above
    ``cold_threshold_K`` are set to exactly 0 (inclusive threshold: a pixel at
    exactly the threshold is retained).
    """
    if cfg.contrast_norm_max is None:
        raise StateError(
            "contrast_norm_max has not been fit; call fit_contrast_norm on "
            "training scenes first"
        )
    if cfg.contrast_norm_max <= 0:
        raise StateError(
            f"contrast_norm_max must be > 0, got {cfg.contrast_norm_max} "
            "(degenerate all-constant training data)"
        )
    if (visible.rows != infrared.rows * cfg.glcm_tile
            or visible.cols != infrared.cols * cfg.glcm_tile):
        raise ValidationError(
            f"visible shape {(visible.rows, visible.cols)} must be infrared "
            f"shape {(infrared.rows, infrared.cols)} times glcm_tile {cfg.glcm_tile}"
        )
    raw = raw_contrast_grid(visible, cfg)
    norm = np.log1p(raw) / math.log1p(cfg.contrast_norm_max)
    norm = np.clip(norm, 0.0, 1.0)
    cold = infrared.values <= cfg.cold_threshold_K
    out = np.where(cold, norm, 0.0)
    return ChannelGrid(
        name="cool_contrast",
        values=out,
        resolution_km=infrared.resolution_km,
        units="normalized contrast",
    )


def fit_contrast_norm(scenes: list[Scene], cfg: FeatureConfig,
                      visible_channel: str = "visible") -> float:
    """Largest raw tile contrast across all training scenes, pre-mask."""
    if not scenes:
        raise ValidationError("fit_contrast_norm: no scenes given")
    best = 0.0
    for scene in scenes:
        raw = raw_contrast_grid(scene.channel(visible_channel), cfg)
        best = max(best, float(raw.max()))
    return best


def infrared_feature(infrared: ChannelGrid) -> ChannelGrid:
    """Identity passthrough of the infrared channel at coarse resolution."""
    vals = infrared.values
    if vals.min() < 150.0 or vals.max() > 350.0:
        logger.warning(
            "infrared values outside plausible kelvin range [150, 350]: "
            "[%s, %s]", vals.min(), vals.max()
        )
    return infrared.with_values(vals, name="infrared")


def derive_labels(precip_flag: ChannelGrid, infrared: ChannelGrid,
                  cfg: FeatureConfig) -> ChannelGrid:
    """Binary convective labels on the infrared grid.

    A pixel is 1 when its (nearest-neighbor downsampled) precipitation
    category is convective (convection, hail, or tropical convective rain)
    and the infrared temperature is at or below the cold threshold.
    """
    flags = precip_flag.values
    codes = np.unique(flags)
    bad = [c for c in codes
           if not (float(c).is_integer() and int(c) in PRECIP_CATEGORIES)]
    if bad:
        raise ValidationError(
            f"unknown precipitation category code(s) {bad}; known codes: "
            f"{sorted(PRECIP_CATEGORIES)}"
        )
    if precip_flag.rows % infrared.rows or precip_flag.cols % infrared.cols:
        raise ValidationError(
            f"precip_flag shape {(precip_flag.rows, precip_flag.cols)} is not "
            f"an integer multiple of infrared shape "
            f"{(infrared.rows, infrared.cols)}"
        )
    factor_r = precip_flag.rows // infrared.rows
    factor_c = precip_flag.cols // infrared.cols
    coarse = flags[::factor_r, ::factor_c].astype(np.int64)
    convective = np.isin(coarse, list(CONVECTIVE_CODES))
    cold = infrared.values <= cfg.cold_threshold_K
    labels = (convective & cold).astype(np.float64)
    return ChannelGrid(
        name="labels",
        values=labels,
        resolution_km=infrared.resolution_km,
        units="binary",
    )


def sza_filter(scenes: list[Scene], cutoff_deg: float = 65.0) -> list[Scene]:
    """Drop scenes whose solar zenith angle is strictly over the cutoff.

    Scenes without solar zenith metadata are kept with a warning (synthetic
    fixtures carry no sun).
    """
    kept = []
    for scene in scenes:
        sza = scene.solar_zenith_deg
        if sza is None:
            logger.warning(
                "scene %s has no solar_zenith_deg metadata; retained",
                scene.scene_id,
            )
            kept.append(scene)
        elif sza <= cutoff_deg:
            kept.append(scene)
    return kept


def reflectance_from_radiance(radiance: np.ndarray, kappa: float,
                              sza_deg: float) -> np.ndarray:
    """Helper converting radiance to reflectance: radiance * kappa / cos(SZA).

    Not part of the core path; desk-scale data ships already normalized.
    """
    return np.asarray(radiance, dtype=np.float64) * kappa / math.cos(
        math.radians(sza_deg)
    )


def featurize_scene(scene: Scene, cfg: FeatureConfig,
                    visible_channel: str = "visible",
                    infrared_channel: str = "infrared",
                    precip_channel: str = "precip_flag") -> Scene:
    """Derive the three model features (and labels when possible).

    Labels come from the precipitation-type channel when present, otherwise
    the scene's existing label grid is carried over.
    """
    visible = scene.channel(visible_channel)
    infrared = scene.channel(infrared_channel)
    channels = {
        "brightness": brightness_feature(visible, cfg),
        "cool_contrast": cool_contrast_feature(visible, infrared, cfg),
        "infrared": infrared_feature(infrared),
    }
    if precip_channel in scene.channels:
        labels = derive_labels(scene.channels[precip_channel], infrared, cfg)
    else:
        labels = scene.labels
    return Scene(
        scene_id=scene.scene_id,
        timestamp=scene.timestamp,
        channels=channels,
        labels=labels,
        solar_zenith_deg=scene.solar_zenith_deg,
    )
