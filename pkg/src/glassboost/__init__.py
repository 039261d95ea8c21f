"""glassboost: glass-box additive boosting for pixel-wise classification.

The toolkit covers a complete small-scale research pipeline:

``grids``
    Channel rasters, scenes, scene bundles on disk, and the flat per-pixel
    table the model trains on.
``glcm`` / ``features``
    Gray-level co-occurrence contrast, box blur, downsampling, the three
    engineered features (brightness, cool contrast, infrared), and binary
    convective labels.
``model``
    The editable additive model: intercept plus binned 1D and 2D feature
    functions under a logistic link, with exact per-term decomposition,
    pixel-wise prediction, importance maps, and JSON serialization.
``train``
    Bagged cyclic gradient boosting for the 1D terms, residual-based pair
    detection and depth-2 boosting for interactions, bag-spread error bars.
``edit``
    Post-training flatten / scale / shift / set edits with bin-level
    locality, provenance, and byte-exact replay.
``metrics``
    Confusion counting, POD/FAR/CSI, and batch map emission.
``synth``
    Deterministic synthetic scene generation for tests and demos.
``cli`` / ``service`` / ``store``
    Batch subcommands, the JSON-over-HTTP editing service, and the
    append-only version store behind it.
"""

__version__ = "0.1.0"

from .errors import StateError, ValidationError
from .grids import (
    ChannelGrid,
    PixelTable,
    Scene,
    flatten_scenes,
    list_scene_bundles,
    load_scene,
    save_scene,
)
from .glcm import GlcmMatrix, compute_glcm, contrast, contrast_tiles, quantize
from .features import (
    CONVECTIVE_CODES,
    FEATURE_NAMES,
    PRECIP_CATEGORIES,
    FeatureConfig,
    box_blur,
    brightness_feature,
    cool_contrast_feature,
    derive_labels,
    downsample_nn,
    featurize_scene,
    fit_contrast_norm,
    infrared_feature,
    sza_filter,
)
from .model import (
    AdditiveModel,
    Term1D,
    Term2D,
    bin_index,
    deserialize,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    serialize,
)
from .train import TrainConfig, TrainReport, fit, fit_pairs, mean_center, \
    quantile_bins, train_with_report
from .edit import EditOp, apply_edit, apply_edits, diff, replay
from .service import build_app
from .store import ModelStore, StaleVersionError
from .metrics import ConfusionCounts, confusion, emit_maps, evaluate_scene, \
    skill_scores
from .synth import SynthSpec, synth_scene

__all__ = [
    "AdditiveModel",
    "ChannelGrid",
    "ConfusionCounts",
    "CONVECTIVE_CODES",
    "EditOp",
    "FEATURE_NAMES",
    "FeatureConfig",
    "GlcmMatrix",
    "ModelStore",
    "build_app",
    "PixelTable",
    "PRECIP_CATEGORIES",
    "Scene",
    "StaleVersionError",
    "StateError",
    "SynthSpec",
    "Term1D",
    "Term2D",
    "TrainConfig",
    "TrainReport",
    "ValidationError",
    "apply_edit",
    "apply_edits",
    "bin_index",
    "box_blur",
    "brightness_feature",
    "compute_glcm",
    "confusion",
    "contrast",
    "contrast_tiles",
    "cool_contrast_feature",
    "derive_labels",
    "deserialize",
    "model_from_dict",
    "model_to_dict",
    "diff",
    "downsample_nn",
    "emit_maps",
    "evaluate_scene",
    "featurize_scene",
    "fit",
    "fit_contrast_norm",
    "fit_pairs",
    "flatten_scenes",
    "infrared_feature",
    "list_scene_bundles",
    "load_model",
    "load_scene",
    "mean_center",
    "quantile_bins",
    "quantize",
    "replay",
    "save_model",
    "save_scene",
    "serialize",
    "skill_scores",
    "synth_scene",
    "sza_filter",
    "train_with_report",
]
