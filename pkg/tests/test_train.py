"""Training: binning, bagged boosting, pair detection, centering."""

import json

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from glassboost import PixelTable, TrainConfig, ValidationError, fit, \
    mean_center, quantile_bins, serialize, train_with_report
from glassboost.train import _logloss, _split_1d, rank_pairs


def make_table(features: dict, targets) -> PixelTable:
    names = tuple(features)
    cols = [np.asarray(features[n], dtype=np.float64) for n in names]
    n = cols[0].size
    return PixelTable(
        feature_names=names,
        rows=np.column_stack(cols),
        targets=np.asarray(targets, dtype=np.int8),
        scene_ids=["t"],
        scene_index=np.zeros(n, dtype=np.int32),
        pixel_row=np.arange(n, dtype=np.int32),
        pixel_col=np.zeros(n, dtype=np.int32),
    )


def quick_config(**over) -> TrainConfig:
    base = dict(learning_rate=0.1, outer_bags=2, max_rounds=120,
                early_stop_patience=15, max_bins_1d=32, max_bins_2d=8,
                max_pairs=0, validation_fraction=0.2, seed=0)
    base.update(over)
    return TrainConfig(**base)


class TestQuantileBins:
    def test_hundred_distinct_four_bins(self):
        edges = quantile_bins(np.arange(1.0, 101.0), max_bins=4)
        np.testing.assert_allclose(edges, [25.5, 50.5, 75.5])

    def test_few_distinct_values_midpoints(self):
        edges = quantile_bins(np.array([1.0, 1.0, 2.0, 5.0, 5.0]),
                              max_bins=8)
        np.testing.assert_allclose(edges, [1.5, 3.5])

    def test_constant_input_no_edges(self):
        assert quantile_bins(np.full(10, 3.3), max_bins=8).size == 0

    def test_edges_strictly_increasing(self):
        rng = np.random.default_rng(0)
        vals = np.round(rng.random(5000), 2)  # heavy ties
        edges = quantile_bins(vals, max_bins=64)
        assert np.all(np.diff(edges) > 0)

    def test_bins_roughly_equal_population(self):
        rng = np.random.default_rng(1)
        vals = rng.random(100_000)
        edges = quantile_bins(vals, max_bins=10)
        assert edges.size == 9
        idx = np.searchsorted(edges, vals, side="left")
        freq = np.bincount(idx, minlength=10) / vals.size
        np.testing.assert_allclose(freq, 0.1, atol=0.01)

    def test_empty_and_nan_rejected(self):
        with pytest.raises(ValidationError):
            quantile_bins(np.zeros(0), 4)
        with pytest.raises(ValidationError):
            quantile_bins(np.array([1.0, np.nan]), 4)


class TestSplitOracle:
    def test_two_bin_split_matches_closed_form(self):
        # gradients G, hessians H; leaf value is G/(H + lam)
        G = np.array([4.0, -2.0])
        H = np.array([8.0, 4.0])
        k, gain, vl, vr = _split_1d(G, H)
        assert k == 0
        assert vl == pytest.approx(4.0 / 8.0, rel=1e-9)
        assert vr == pytest.approx(-2.0 / 4.0, rel=1e-9)

    def test_exhaustive_argmax(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            G = rng.normal(size=6)
            H = rng.uniform(0.5, 2.0, size=6)
            got = _split_1d(G, H)
            assert got is not None
            k, gain, _, _ = got
            lam = 1e-12
            gains = []
            for kk in range(5):
                gl, hl = G[:kk + 1].sum(), H[:kk + 1].sum()
                gr, hr = G[kk + 1:].sum(), H[kk + 1:].sum()
                parent = G.sum() ** 2 / (H.sum() + lam)
                gains.append(gl * gl / (hl + lam) + gr * gr / (hr + lam)
                             - parent)
            best = int(np.argmax(gains))
            assert k == best
            assert gain == pytest.approx(gains[best], rel=1e-9)

    def test_single_bin_returns_none(self):
        assert _split_1d(np.array([1.0]), np.array([1.0])) is None


def separable_table(n=3000, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, n)
    noise = rng.uniform(0.0, 1.0, n)
    y = (x + rng.normal(0, 0.25, n) > 0).astype(np.int8)
    return make_table({"signal": x, "noise": noise}, y)


class TestBoosting:
    def test_train_loss_monotone_nonincreasing(self):
        table = separable_table()
        _, report = train_with_report(table, quick_config())
        for bag in report.bags:
            losses = np.asarray(bag.train_losses)
            assert losses.size >= 1
            assert np.all(np.diff(losses) <= 1e-12)

    def test_signal_learned(self):
        table = separable_table()
        model, _ = train_with_report(table, quick_config())
        x = {"signal": table.column("signal"),
             "noise": table.column("noise")}
        auc = roc_auc_score(table.targets, model.predict_proba(x))
        assert auc >= 0.97

    def test_scores_monotone_where_signal_is(self):
        table = separable_table()
        model, _ = train_with_report(table, quick_config())
        t = model.term("signal")
        # interior bins should trend upward with the underlying logit
        mid = t.scores[1:-1]
        assert mid[-1] > mid[0]
        assert t.scores[-1] > t.scores[0]

    def test_constant_feature_gets_zero_scores(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, 2000)
        y = (x > 0).astype(np.int8)
        table = make_table({"x": x, "flat": np.full(2000, 5.0)}, y)
        model, _ = train_with_report(table, quick_config())
        np.testing.assert_array_equal(model.term("flat").scores, [0.0])

    def test_intercept_tracks_base_rate(self):
        rng = np.random.default_rng(4)
        y = (rng.random(4000) < 0.3).astype(np.int8)
        table = make_table({"junk": rng.random(4000)}, y)
        model, _ = train_with_report(table, quick_config(max_rounds=30))
        x = {"junk": np.array([0.5])}
        assert model.predict_proba(x)[0] == pytest.approx(0.3, abs=0.05)

    def test_requires_both_classes(self):
        table = make_table({"x": np.arange(10.0)},
                           np.ones(10, dtype=np.int8))
        with pytest.raises(ValidationError):
            train_with_report(table, quick_config())

    def test_nan_features_rejected(self):
        x = np.arange(10.0)
        x[3] = np.nan
        y = (np.arange(10) % 2).astype(np.int8)
        with pytest.raises(ValidationError):
            train_with_report(make_table({"x": x}, y), quick_config())


class TestErrorBars:
    def test_single_bag_zero_bars(self):
        table = separable_table(n=1500)
        model, _ = train_with_report(table, quick_config(outer_bags=1))
        for t in (model.term("signal"), model.term("noise")):
            assert t.error_bars is not None
            np.testing.assert_array_equal(t.error_bars, 0.0)

    def test_multi_bag_bars_nonnegative_and_informative(self):
        table = separable_table()
        model, _ = train_with_report(table, quick_config(outer_bags=4))
        bars = model.term("signal").error_bars
        assert np.all(bars >= 0.0)
        assert bars.max() > 0.0

    def test_bars_are_population_sd_across_bags(self):
        table = separable_table(n=2000)
        cfg = quick_config(outer_bags=3)
        model, report = train_with_report(table, cfg)
        stack = np.stack([np.asarray(b.scores["signal"])
                          for b in report.bags])
        np.testing.assert_allclose(model.term("signal").error_bars,
                                   stack.std(axis=0, ddof=0), atol=1e-12)


class TestMeanCentering:
    def test_terms_center_to_zero_weighted_mean(self):
        table = separable_table()
        model, _ = train_with_report(table, quick_config())
        for t in model.terms():
            if ":" in t.id:
                continue
            col = table.column(t.feature)
            vals = t.lookup(col)
            assert vals.mean() == pytest.approx(0.0, abs=1e-9)

    def test_mean_center_moves_mass_to_intercept_only(self):
        from glassboost import AdditiveModel, Term1D
        from glassboost.model import bin_index

        table = separable_table(n=1000)
        model, _ = train_with_report(table, quick_config())
        # knock one term off-center, then re-center with table weights
        t = model.term("signal")
        shifted = Term1D(t.feature, t.edges, t.scores + 1.7,
                         error_bars=t.error_bars, edited_mask=t.edited_mask)
        others = tuple(x for x in model.terms1d if x.feature != "signal")
        off = AdditiveModel(intercept=model.intercept,
                            terms1d=others + (shifted,),
                            terms2d=model.terms2d)
        weights = {}
        for term in off.terms1d:
            idx = bin_index(term.edges, table.column(term.feature))
            weights[term.id] = np.bincount(
                idx, minlength=term.n_bins).astype(np.float64)
        centered = mean_center(off, weights)
        x = {"signal": table.column("signal"),
             "noise": table.column("noise")}
        # centering trades term mass against the intercept; predictions of
        # the model being centered are preserved exactly
        np.testing.assert_allclose(centered.raw_score(x),
                                   off.raw_score(x), atol=1e-9)
        assert centered.intercept == pytest.approx(model.intercept + 1.7,
                                                   abs=1e-9)
        got = centered.term("signal")
        assert got.lookup(table.column("signal")).mean() == pytest.approx(
            0.0, abs=1e-9)


class TestDeterminism:
    def test_same_seed_bit_identical(self):
        table = separable_table(n=1200)
        cfg = quick_config(max_pairs=None)
        m1, _ = train_with_report(table, cfg)
        m2, _ = train_with_report(table, cfg)
        assert serialize(m1) == serialize(m2)

    def test_different_seed_differs(self):
        table = separable_table(n=1200)
        m1, _ = train_with_report(table, quick_config(seed=0))
        m2, _ = train_with_report(table, quick_config(seed=1))
        assert serialize(m1) != serialize(m2)

    def test_feature_order_invariance(self):
        table = separable_table(n=1200)
        swapped = make_table(
            {"noise": table.column("noise"),
             "signal": table.column("signal")},
            table.targets)
        cfg = quick_config(max_pairs=None)
        m1, _ = train_with_report(table, cfg)
        m2, _ = train_with_report(swapped, cfg)
        assert serialize(m1) == serialize(m2)


def xor_table(n=4000, seed=5, extra_noise=True):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, n)
    y_feat = rng.uniform(0, 1, n)
    label = ((x > 0.5) ^ (y_feat > 0.5)).astype(np.int8)
    flip = rng.random(n) < 0.02
    label = np.where(flip, 1 - label, label).astype(np.int8)
    feats = {"x": x, "y": y_feat}
    if extra_noise:
        feats["z"] = rng.uniform(0, 1, n)
    return make_table(feats, label)


class TestPairs:
    def test_xor_pair_ranks_first(self):
        table = xor_table()
        model, report = train_with_report(
            table, quick_config(max_pairs=1, max_rounds=250))
        assert report.pair_ranking[0]["pair"] == "x:y"
        strengths = {r["pair"]: r["strength"] for r in report.pair_ranking}
        assert strengths["x:y"] > 3 * max(strengths["x:z"],
                                          strengths["y:z"])
        assert [t.id for t in model.terms2d] == ["x:y"]

    def test_xor_solved_only_with_pair(self):
        table = xor_table(extra_noise=False)
        cols = {"x": table.column("x"), "y": table.column("y")}
        flat, _ = train_with_report(table, quick_config(max_pairs=0))
        auc_flat = roc_auc_score(table.targets, flat.predict_proba(cols))
        paired, _ = train_with_report(
            table, quick_config(max_pairs=1, max_rounds=300))
        auc_pair = roc_auc_score(table.targets, paired.predict_proba(cols))
        assert auc_flat < 0.6
        assert auc_pair > 0.95

    def test_max_pairs_zero_yields_no_2d_terms(self):
        model, report = train_with_report(xor_table(n=1500),
                                          quick_config(max_pairs=0))
        assert model.terms2d == ()
        assert report.pairs_selected == []
        # ranking is still reported for inspection
        assert len(report.pair_ranking) == 3

    def test_max_pairs_all_keyword(self):
        model, _ = train_with_report(
            xor_table(n=1500), quick_config(max_pairs="all", max_rounds=60))
        assert len(model.terms2d) == 3

    def test_additive_data_ranks_pairs_low(self):
        rng = np.random.default_rng(6)
        n = 4000
        a = rng.uniform(-1, 1, n)
        b = rng.uniform(-1, 1, n)
        z = a + b + rng.normal(0, 0.3, n)
        y = (z > 0).astype(np.int8)
        table = make_table({"a": a, "b": b}, y)
        _, report = train_with_report(table, quick_config(max_pairs=0))
        xor_strength = train_with_report(
            xor_table(n=n, extra_noise=False),
            quick_config(max_pairs=0))[1].pair_ranking[0]["strength"]
        additive_strength = report.pair_ranking[0]["strength"]
        assert additive_strength < 0.25 * xor_strength


class TestRankPairsDirect:
    def test_strength_formula_on_hand_histogram(self):
        # one pair, 2x2 bins, symmetric XOR-like residuals
        g = np.array([1.0, -1.0, -1.0, 1.0])
        h = np.full(4, 0.25)
        ix = np.array([0, 0, 1, 1], dtype=np.int32)
        iy = np.array([0, 1, 0, 1], dtype=np.int32)
        ranking = rank_pairs(
            g, h,
            {"u": ix, "v": iy},
            {"u": 2, "v": 2},
            ["u", "v"],
        )
        (fx, fy, strength) = ranking[0]
        lam = 1e-12
        cells = sum(gg * gg / (hh + lam) for gg, hh in
                    [(1.0, 0.25), (-1.0, 0.25), (-1.0, 0.25), (1.0, 0.25)])
        rows = (0.0 ** 2) / (0.5 + lam) * 2
        cols = (0.0 ** 2) / (0.5 + lam) * 2
        total = (0.0 ** 2) / (1.0 + lam)
        assert (fx, fy) == ("u", "v")
        assert strength == pytest.approx(cells - rows - cols + total,
                                         rel=1e-9)


class TestReport:
    def test_report_round_trips_to_json(self):
        table = separable_table(n=1000)
        _, report = train_with_report(table, quick_config())
        blob = json.dumps(report.to_dict(), sort_keys=True)
        parsed = json.loads(blob)
        assert parsed["feature_order"] == ["noise", "signal"]
        assert len(parsed["bags"]) == 2
        for bag in parsed["bags"]:
            assert bag["rounds_run"] >= bag["best_round"]

    def test_fit_returns_same_model_as_train_with_report(self):
        table = separable_table(n=1000)
        cfg = quick_config()
        assert serialize(fit(table, cfg)) == serialize(
            train_with_report(table, cfg)[0])


class TestConfig:
    def test_round_trip(self):
        cfg = TrainConfig(learning_rate=0.05, max_pairs=3, seed=9)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_rejects_unknown_keys(self):
        with pytest.raises(ValidationError):
            TrainConfig.from_dict({"learning_rate": 0.1, "oops": True})

    def test_rejects_bad_rate(self):
        with pytest.raises(ValidationError):
            TrainConfig(learning_rate=0.0)
