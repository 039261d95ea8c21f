"""Deterministic synthetic scenes for tests, demos, and desk-scale runs.

A scene is built from continuous fields sampled at three grids: fine visible
reflectance, coarse infrared brightness temperature, and a mid-resolution
categorical precipitation-type grid. Ingredients:

* warm, low-reflectance ground with mild smooth variation
* a cold, flat, bright anvil ellipse with feathered edges
* small overshooting-top cores inside the anvil: colder, brighter, and
  strongly textured, with convective precipitation flags underneath
* optional shadows (visible-only darkening) and warm-ground precipitation
  patches that the cold mask must reject

Labels are derived from the precipitation flags and infrared grid with the
same rule the feature pipeline uses, so end-to-end runs are self-consistent.
All randomness flows from one seeded generator; repeated calls with the same
spec and seed are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ValidationError
from .features import FeatureConfig, derive_labels
from .grids import ChannelGrid, Scene


@dataclass
class SynthSpec:
    """Parameters of the synthetic scene generator."""

    fine_size: int = 256
    fine_resolution_km: float = 0.5
    coarse_factor: int = 4      # infrared grid = fine_size / coarse_factor
    precip_factor: int = 2      # precip grid = fine_size / precip_factor
    n_ots: int = 2
    n_shadows: int = 2
    n_warm_patches: int = 1     # warm-ground precip patches (mask must reject)
    ground_ir_K: float = 288.0
    anvil_ir_K: float = 226.0
    core_ir_drop_K: float = 20.0
    ground_reflectance: float = 0.14
    anvil_reflectance: float = 0.72
    core_reflectance: float = 0.92
    core_texture_amp: float = 0.12
    core_radius_km: tuple[float, float] = (4.0, 7.0)
    min_core_separation_km: float = 18.0
    with_anvil: bool = True

    def __post_init__(self) -> None:
        if self.fine_size % self.coarse_factor or self.fine_size % self.precip_factor:
            raise ValidationError(
                "coarse_factor and precip_factor must divide fine_size"
            )
        if self.n_ots < 0:
            raise ValidationError("n_ots must be >= 0")
        if self.core_radius_km[0] > self.core_radius_km[1]:
            raise ValidationError("core_radius_km range is inverted")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(
                f"unknown scene generator keys: {sorted(unknown)}"
            )
        d = dict(d)
        if "core_radius_km" in d:
            d["core_radius_km"] = tuple(d["core_radius_km"])
        return cls(**d)


def _axis_km(n: int, res: float) -> np.ndarray:
    # pixel-center coordinates in km
    return (np.arange(n) + 0.5) * res


def _smooth_field(rng: np.random.Generator, shape: tuple[int, int],
                  knots: int = 9) -> np.ndarray:
    """Smooth random field in [0, 1] via bilinear interpolation of a knot grid."""
    grid = rng.random((knots, knots))
    interp = RegularGridInterpolator(
        (np.arange(knots), np.arange(knots)), grid, method="linear"
    )
    yi = np.linspace(0.0, knots - 1.0, shape[0])
    xi = np.linspace(0.0, knots - 1.0, shape[1])
    pts = np.stack(np.meshgrid(yi, xi, indexing="ij"), axis=-1)
    return interp(pts)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _place_cores(rng: np.random.Generator, spec: SynthSpec,
                 anvil_cy: float, anvil_cx: float,
                 anvil_ay: float, anvil_ax: float) -> list[tuple[float, float, float]]:
    """Pick OT core centers inside the anvil with pairwise separation."""
    cores: list[tuple[float, float, float]] = []
    attempts = 0
    while len(cores) < spec.n_ots:
        attempts += 1
        if attempts > 500:
            raise ValidationError(
                f"could not place {spec.n_ots} cores with separation "
                f"{spec.min_core_separation_km} km; reduce n_ots"
            )
        # uniform in the inner 55% of the anvil ellipse
        ang = rng.uniform(0.0, 2.0 * math.pi)
        rad = math.sqrt(rng.uniform(0.0, 1.0)) * 0.55
        cy = anvil_cy + rad * math.sin(ang) * anvil_ay
        cx = anvil_cx + rad * math.cos(ang) * anvil_ax
        r = rng.uniform(*spec.core_radius_km)
        if all(math.hypot(cy - oy, cx - ox) >= spec.min_core_separation_km
               for oy, ox, _ in cores):
            cores.append((cy, cx, r))
    return cores


def synth_scene(spec: SynthSpec, seed: int, scene_id: str | None = None) -> Scene:
    """Generate one deterministic synthetic scene.

    Parameters
    ----------
    spec : SynthSpec
    seed : int
        Drives every random choice; identical (spec, seed) pairs produce
        bit-identical scenes.
    scene_id : str, optional
        Defaults to ``synth-{seed:08d}``.
    """
    rng = np.random.default_rng(seed)
    fine_n = spec.fine_size
    coarse_n = fine_n // spec.coarse_factor
    precip_n = fine_n // spec.precip_factor
    fine_res = spec.fine_resolution_km
    coarse_res = fine_res * spec.coarse_factor
    precip_res = fine_res * spec.precip_factor
    extent_km = fine_n * fine_res

    fy = _axis_km(fine_n, fine_res)[:, None]
    fx = _axis_km(fine_n, fine_res)[None, :]
    cy = _axis_km(coarse_n, coarse_res)[:, None]
    cx = _axis_km(coarse_n, coarse_res)[None, :]
    py = _axis_km(precip_n, precip_res)[:, None]
    px = _axis_km(precip_n, precip_res)[None, :]

    # ground
    vis = (spec.ground_reflectance
           + 0.06 * _smooth_field(rng, (fine_n, fine_n))
           + 0.01 * rng.standard_normal((fine_n, fine_n)))
    ir_coarse = spec.ground_ir_K + 8.0 * _smooth_field(rng, (coarse_n, coarse_n))
    ir_precip_grid = np.full((precip_n, precip_n), spec.ground_ir_K)

    cores: list[tuple[float, float, float]] = []
    if spec.with_anvil:
        anvil_cy = extent_km / 2 + rng.uniform(-0.06, 0.06) * extent_km
        anvil_cx = extent_km / 2 + rng.uniform(-0.06, 0.06) * extent_km
        anvil_ay = rng.uniform(0.28, 0.40) * extent_km
        anvil_ax = rng.uniform(0.30, 0.42) * extent_km
        feather = 0.12

        def anvil_weight(yy, xx):
            d = np.sqrt(((yy - anvil_cy) / anvil_ay) ** 2
                        + ((xx - anvil_cx) / anvil_ax) ** 2)
            return _smoothstep((1.0 - d) / feather)

        w_fine = anvil_weight(fy, fx)
        w_coarse = anvil_weight(cy, cx)
        w_precip = anvil_weight(py, px)
        anvil_ir = spec.anvil_ir_K + 5.0 * _smooth_field(rng, (coarse_n, coarse_n))
        anvil_vis = spec.anvil_reflectance + 0.04 * _smooth_field(rng, (fine_n, fine_n))
        vis = vis + w_fine * (anvil_vis - vis)
        ir_coarse = ir_coarse + w_coarse * (anvil_ir - ir_coarse)
        ir_precip_grid = ir_precip_grid + w_precip * (spec.anvil_ir_K - ir_precip_grid)

        if spec.n_ots:
            cores = _place_cores(rng, spec, anvil_cy, anvil_cx, anvil_ay, anvil_ax)
    elif spec.n_ots:
        raise ValidationError("cores require an anvil (with_anvil=False, n_ots>0)")

    precip = np.zeros((precip_n, precip_n), dtype=np.float64)

    for core_y, core_x, core_r in cores:
        # convective code: mostly convection, sometimes hail or tropical conv.
        code = float(rng.choice([3, 3, 4, 7]))

        def bump(yy, xx, radius_scale=1.0):
            u = np.sqrt((yy - core_y) ** 2 + (xx - core_x) ** 2) / (core_r * radius_scale)
            w = np.clip(1.0 - u * u, 0.0, 1.0)
            return w * w

        # IR dome: influence reaches ~1.6x the core radius, floor near the center
        ir_coarse = ir_coarse - spec.core_ir_drop_K * bump(cy, cx, 1.6)
        # bright, strongly textured cap on the visible grid
        w_fine = bump(fy, fx, 1.6)
        vis = vis + w_fine * (spec.core_reflectance - vis)
        vis = vis + (w_fine > 0.05) * spec.core_texture_amp * (
            rng.random((fine_n, fine_n)) - 0.5
        )
        # precipitation flags cover the label disk
        dist_p = np.sqrt((py - core_y) ** 2 + (px - core_x) ** 2)
        precip = np.where(dist_p <= core_r, code, precip)

    # shadows darken the visible channel only
    for _ in range(spec.n_shadows):
        if not cores:
            break
        core_y, core_x, core_r = cores[int(rng.integers(len(cores)))]
        off = rng.uniform(1.2, 1.8) * core_r
        ang = rng.uniform(0.0, 2.0 * math.pi)
        sy, sx = core_y + off * math.sin(ang), core_x + off * math.cos(ang)
        d = np.sqrt((fy - sy) ** 2 + (fx - sx) ** 2) / (0.7 * core_r)
        vis = vis * (1.0 - 0.3 * np.clip(1.0 - d * d, 0.0, 1.0))

    # warm-ground precipitation patches: convective flags the cold mask rejects.
    # Restricted to pixels whose idealized temperature is well above the
    # threshold so label disks can only ever appear at OT cores.
    for _ in range(spec.n_warm_patches):
        wy = rng.uniform(0.05, 0.95) * extent_km
        wx = rng.uniform(0.05, 0.95) * extent_km
        code = float(rng.choice([1, 2, 3, 5, 6]))
        d = np.sqrt((py - wy) ** 2 + (px - wx) ** 2)
        warm = ir_precip_grid > 270.0
        precip = np.where((d <= 4.0) & (precip == 0.0) & warm, code, precip)

    vis = np.clip(vis, 0.0, 1.05)

    def f32(a: np.ndarray) -> np.ndarray:
        return a.astype(np.float32).astype(np.float64)

    channels = {
        "visible": ChannelGrid("visible", f32(vis), fine_res, "reflectance"),
        "infrared": ChannelGrid("infrared", f32(ir_coarse), coarse_res, "kelvin"),
        "precip_flag": ChannelGrid("precip_flag", f32(precip), precip_res, "category"),
    }
    labels = derive_labels(channels["precip_flag"], channels["infrared"],
                           FeatureConfig())
    # daytime pass: well inside the illumination cutoff
    sza = float(np.float32(rng.uniform(20.0, 60.0)))
    return Scene(
        scene_id=scene_id or f"synth-{seed:08d}",
        timestamp="2021-01-01T00:00:00Z",
        channels=channels,
        labels=labels,
        solar_zenith_deg=sza,
    )
