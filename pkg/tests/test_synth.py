"""Synthetic scene generator: grids, determinism, labeled structure."""

import numpy as np
import pytest
from scipy import ndimage

from glassboost import SynthSpec, ValidationError, synth_scene
from glassboost.features import CONVECTIVE_CODES


class TestGrids:
    def test_shapes_and_resolutions(self):
        scene = synth_scene(SynthSpec(), seed=0)
        vis = scene.channel("visible")
        ir = scene.channel("infrared")
        pf = scene.channel("precip_flag")
        assert vis.values.shape == (256, 256)
        assert vis.resolution_km == 0.5
        assert ir.values.shape == (64, 64)
        assert ir.resolution_km == 2.0
        assert pf.values.shape == (128, 128)
        assert pf.resolution_km == 1.0
        assert scene.labels.values.shape == (64, 64)

    def test_physical_ranges(self):
        scene = synth_scene(SynthSpec(), seed=1)
        vis = scene.channel("visible").values
        ir = scene.channel("infrared").values
        pf = scene.channel("precip_flag").values
        assert vis.min() >= 0.0 and vis.max() <= 1.05
        assert ir.min() > 150.0 and ir.max() < 350.0
        assert set(np.unique(pf)) <= set(float(c) for c in range(8))

    def test_float32_representable(self):
        scene = synth_scene(SynthSpec(), seed=2)
        for g in scene.channels.values():
            vals = g.values
            np.testing.assert_array_equal(
                vals, vals.astype(np.float32).astype(np.float64))


class TestDeterminism:
    def test_same_seed_identical(self):
        a = synth_scene(SynthSpec(), seed=33)
        b = synth_scene(SynthSpec(), seed=33)
        for name in a.channels:
            np.testing.assert_array_equal(a.channel(name).values,
                                          b.channel(name).values)
        np.testing.assert_array_equal(a.labels.values, b.labels.values)

    def test_different_seeds_differ(self):
        a = synth_scene(SynthSpec(), seed=33)
        b = synth_scene(SynthSpec(), seed=34)
        assert not np.array_equal(a.channel("visible").values,
                                  b.channel("visible").values)

    def test_scene_id_from_seed(self):
        assert synth_scene(SynthSpec(), seed=7).scene_id == "synth-00000007"
        assert synth_scene(SynthSpec(), seed=7,
                           scene_id="custom").scene_id == "custom"


class TestStructure:
    @pytest.mark.parametrize("n_ots", [0, 1, 3])
    def test_label_component_count(self, n_ots):
        spec = SynthSpec(n_ots=n_ots)
        scene = synth_scene(spec, seed=5)
        labels = scene.labels.values
        _, n_found = ndimage.label(labels > 0,
                                   structure=np.ones((3, 3), dtype=int))
        assert n_found == n_ots

    def test_zero_ots_is_all_negative(self):
        scene = synth_scene(SynthSpec(n_ots=0), seed=9)
        assert scene.labels.values.sum() == 0.0
        pf = scene.channel("precip_flag").values
        assert not np.isin(pf, sorted(CONVECTIVE_CODES)).any()

    def test_cores_are_convective_and_cold(self):
        scene = synth_scene(SynthSpec(n_ots=2), seed=13)
        pf = scene.channel("precip_flag").values
        convective = np.isin(pf, sorted(CONVECTIVE_CODES))
        assert convective.any()
        # cores sit inside the anvil, far below the cold threshold
        ir = scene.channel("infrared").values
        labels = scene.labels.values
        assert np.all(ir[labels > 0] <= 250.0)

    def test_cores_brighter_than_background(self):
        scene = synth_scene(SynthSpec(n_ots=2), seed=17)
        vis = scene.channel("visible").values
        labels_fine = np.repeat(np.repeat(scene.labels.values, 4, axis=0),
                                4, axis=1)
        assert vis[labels_fine > 0].mean() > vis[labels_fine == 0].mean()

    def test_anvil_colder_than_ground(self):
        spec = SynthSpec(n_ots=1)
        scene = synth_scene(spec, seed=21)
        ir = scene.channel("infrared").values
        assert ir.min() < spec.anvil_ir_K + 5.0
        assert ir.max() > spec.ground_ir_K - 15.0

    def test_base_rate_is_rare(self):
        rates = []
        for seed in range(6):
            scene = synth_scene(SynthSpec(), seed=seed)
            rates.append(scene.labels.values.mean())
        assert 0.0 < np.mean(rates) < 0.15

    def test_crowded_spec_raises(self):
        # too many cores for the separation constraint to be satisfiable
        spec = SynthSpec(n_ots=40, min_core_separation_km=30)
        with pytest.raises(ValidationError):
            synth_scene(spec, seed=3)

    def test_solar_zenith_recorded(self):
        scene = synth_scene(SynthSpec(), seed=4)
        assert scene.solar_zenith_deg is not None
        assert 0.0 <= scene.solar_zenith_deg <= 90.0
