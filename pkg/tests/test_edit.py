"""Post-training edits: masks, score surgery, provenance, replay."""

import numpy as np
import pytest

from glassboost import AdditiveModel, EditOp, Term1D, Term2D, \
    ValidationError, apply_edit, apply_edits, diff, replay, serialize
from glassboost.edit import affected_bins


def base_model():
    t1 = Term1D(feature="bright", edges=np.array([0.2, 0.4, 0.6, 0.8]),
                scores=np.array([-0.8, -0.2, 0.1, 0.5, 1.2]),
                error_bars=np.array([0.05, 0.04, 0.03, 0.04, 0.06]))
    t2 = Term1D(feature="temp", edges=np.array([250.0, 270.0]),
                scores=np.array([0.9, 0.0, -0.7]),
                error_bars=np.array([0.02, 0.01, 0.03]))
    pair = Term2D(feature_x="bright", feature_y="temp",
                  edges_x=np.array([0.5]), edges_y=np.array([260.0]),
                  scores=np.array([[0.3, -0.3], [-0.1, 0.1]]))
    return AdditiveModel(intercept=-2.0, terms1d=(t1, t2), terms2d=(pair,))


class TestAffectedBins:
    def test_interval_overlap_semantics(self):
        edges = np.array([0.2, 0.4, 0.6, 0.8])
        # bins: (-inf,.2] (.2,.4] (.4,.6] (.6,.8] (.8,inf)
        # lo sits exactly on an edge, so it touches the bin that edge closes
        mask = affected_bins(edges, 0.4, 0.6)
        assert mask.tolist() == [False, True, True, False, False]

    def test_interior_range_hits_single_bin(self):
        edges = np.array([0.2, 0.4, 0.6, 0.8])
        mask = affected_bins(edges, 0.41, 0.59)
        assert mask.tolist() == [False, False, True, False, False]

    def test_range_touching_edge_only_does_not_spill(self):
        edges = np.array([0.2, 0.4, 0.6, 0.8])
        # right-closed bins: lo exactly on an edge belongs to the lower bin
        mask = affected_bins(edges, 0.4, 0.45)
        assert mask.tolist() == [False, True, True, False, False]

    def test_open_ended_ranges(self):
        edges = np.array([0.2, 0.4, 0.6, 0.8])
        low = affected_bins(edges, -np.inf, 0.3)
        high = affected_bins(edges, 0.7, np.inf)
        assert low.tolist() == [True, True, False, False, False]
        assert high.tolist() == [False, False, False, True, True]

    def test_full_range(self):
        edges = np.array([1.0])
        assert affected_bins(edges, -np.inf, np.inf).tolist() == [True, True]


class TestFlattenRange:
    def test_min_in_range(self):
        m = base_model()
        op = EditOp(kind="flatten_range", term="bright",
                    range=[0.45, 0.95], value="min_in_range", author="qa")
        out = apply_edit(m, op)
        t = out.term("bright")
        # bins (.4,.6], (.6,.8], (.8,inf) -> min of (0.1, 0.5, 1.2)
        np.testing.assert_allclose(t.scores[2:], 0.1)
        np.testing.assert_array_equal(t.scores[:2], [-0.8, -0.2])

    def test_explicit_value(self):
        m = base_model()
        op = EditOp(kind="flatten_range", term="bright",
                    range=[-np.inf, 0.2], value=0.0)
        out = apply_edit(m, op)
        assert out.term("bright").scores[0] == 0.0

    def test_range_matching_no_bins_rejected(self):
        m = base_model()
        # empty interval cannot be expressed: lo > hi errors at construction
        with pytest.raises(ValidationError):
            EditOp(kind="flatten_range", term="bright", range=[0.9, 0.3],
                   value=0.0)


class TestScaleShiftSet:
    def test_scale_about_zero(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="scale", term="temp", factor=0.5))
        np.testing.assert_allclose(out.term("temp").scores,
                                   [0.45, 0.0, -0.35])

    def test_scale_restricted_range(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="scale", term="temp", factor=0.0,
                                   range=[280.0, np.inf]))
        np.testing.assert_allclose(out.term("temp").scores, [0.9, 0.0, 0.0])

    def test_shift(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="shift", term="bright", delta=0.25,
                                   range=[0.0, 0.2]))
        assert out.term("bright").scores[0] == pytest.approx(-0.55)
        np.testing.assert_array_equal(out.term("bright").scores[1:],
                                      m.term("bright").scores[1:])

    def test_set_value_whole_term(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="set_value", term="temp",
                                   value=0.0))
        np.testing.assert_array_equal(out.term("temp").scores, 0.0)

    def test_missing_parameter_rejected(self):
        with pytest.raises(ValidationError):
            EditOp(kind="scale", term="temp")
        with pytest.raises(ValidationError):
            EditOp(kind="shift", term="temp")
        with pytest.raises(ValidationError):
            EditOp(kind="set_value", term="temp")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            EditOp(kind="smooth", term="temp", value=1.0)


class TestPairEdits:
    def test_rectangular_range(self):
        m = base_model()
        op = EditOp(kind="set_value", term="bright:temp", value=0.0,
                    range=[[0.6, np.inf], [-np.inf, 255.0]])
        out = apply_edit(m, op)
        got = out.term("bright:temp").scores
        # only the (x>0.5 bin, y<=260 bin) cell is zeroed
        np.testing.assert_allclose(got, [[0.3, -0.3], [0.0, 0.1]])
        assert out.term("bright:temp").edited_mask[1, 0]
        assert not out.term("bright:temp").edited_mask[0, 0]

    def test_1d_range_on_pair_rejected(self):
        m = base_model()
        with pytest.raises(ValidationError):
            apply_edit(m, EditOp(kind="set_value", term="bright:temp",
                                 value=0.0, range=[0.0, 1.0]))

    def test_rect_range_on_1d_term_rejected(self):
        m = base_model()
        with pytest.raises(ValidationError):
            apply_edit(m, EditOp(kind="set_value", term="bright", value=0.0,
                                 range=[[0.0, 1.0], [0.0, 1.0]]))


class TestLocality:
    def test_untouched_terms_bit_identical(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="shift", term="bright", delta=0.1,
                                   range=[0.3, 0.5]))
        assert out.term("temp").scores is not None
        np.testing.assert_array_equal(out.term("temp").scores,
                                      m.term("temp").scores)
        np.testing.assert_array_equal(out.term("bright:temp").scores,
                                      m.term("bright:temp").scores)
        assert out.intercept == m.intercept

    def test_untouched_bins_bit_identical(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="shift", term="bright", delta=0.1,
                                   range=[0.3, 0.5]))
        t, t0 = out.term("bright"), m.term("bright")
        touched = affected_bins(t0.edges, 0.3, 0.5)
        np.testing.assert_array_equal(t.scores[~touched],
                                      t0.scores[~touched])
        np.testing.assert_array_equal(t.edited_mask, touched)

    def test_decomposition_changes_only_for_edited_region(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="set_value", term="bright",
                                   value=0.0, range=[0.8001, np.inf]))
        x_outside = {"bright": 0.5, "temp": 265.0}
        x_inside = {"bright": 0.9, "temp": 265.0}
        assert out.raw_score(x_outside) == m.raw_score(x_outside)
        assert out.raw_score(x_inside) != m.raw_score(x_inside)

    def test_error_bars_cleared_only_on_edited_bins(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="scale", term="bright", factor=2.0,
                                   range=[0.41, 0.59]))
        eb, eb0 = out.term("bright").error_bars, m.term("bright").error_bars
        assert np.isnan(eb[2])
        keep = [0, 1, 3, 4]
        np.testing.assert_array_equal(eb[keep], eb0[keep])


class TestProvenance:
    def test_version_chain_and_log(self):
        m = base_model()
        op1 = EditOp(kind="shift", term="temp", delta=-0.1, author="ann",
                     note="cooling bias", applied_at="2021-05-01T10:00:00Z")
        op2 = EditOp(kind="scale", term="temp", factor=0.5, author="bob",
                     applied_at="2021-05-01T11:00:00Z")
        out = apply_edits(m, [op1, op2])
        assert out.version == m.version + 2
        assert out.parent_version == m.version + 1
        assert len(out.edit_log) == 2
        assert out.edit_log[0]["author"] == "ann"
        assert out.edit_log[0]["note"] == "cooling bias"
        assert out.edit_log[0]["applied_at"] == "2021-05-01T10:00:00Z"
        assert out.edit_log[1]["kind"] == "scale"

    def test_apply_edit_never_stamps_time(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="shift", term="temp", delta=0.1))
        assert out.edit_log[0]["applied_at"] is None

    def test_original_model_untouched(self):
        m = base_model()
        before = serialize(m)
        apply_edit(m, EditOp(kind="set_value", term="temp", value=9.9))
        assert serialize(m) == before


class TestReplay:
    def test_replay_reproduces_model_bit_exact(self):
        m = base_model()
        ops = [
            EditOp(kind="flatten_range", term="bright", range=[0.5, 0.7],
                   value="min_in_range", author="a",
                   applied_at="2021-01-02T03:04:05Z"),
            EditOp(kind="scale", term="bright:temp", factor=0.25,
                   author="b", applied_at="2021-01-02T03:05:06Z"),
            EditOp(kind="shift", term="temp", delta=0.33, author="a",
                   applied_at="2021-01-02T03:06:07Z"),
        ]
        edited = apply_edits(m, ops)
        rebuilt = replay(m, list(edited.edit_log))
        assert serialize(rebuilt) == serialize(edited)

    def test_replay_rejects_diverged_log(self):
        m = base_model()
        edited = apply_edit(m, EditOp(kind="shift", term="temp", delta=0.1))
        log = [dict(edited.edit_log[0])]
        log[0]["delta"] = 0.2
        other = apply_edit(m, EditOp(kind="shift", term="temp", delta=0.3))
        with pytest.raises(ValidationError):
            replay(other, log)

    def test_replay_from_midpoint(self):
        m = base_model()
        op1 = EditOp(kind="shift", term="temp", delta=0.1)
        op2 = EditOp(kind="scale", term="temp", factor=0.5)
        v1 = apply_edit(m, op1)
        v2 = apply_edit(v1, op2)
        rebuilt = replay(v1, list(v2.edit_log))
        assert serialize(rebuilt) == serialize(v2)


class TestDiff:
    def test_diff_reports_only_changed_bins(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="shift", term="bright", delta=0.5,
                                   range=[0.41, 0.59]))
        d = diff(m, out)
        assert set(d) == {"bright"}
        assert [entry[0] for entry in d["bright"]] == [2]
        bin_no, before, after = d["bright"][0]
        assert before == pytest.approx(0.1)
        assert after == pytest.approx(0.6)

    def test_diff_2d_uses_cell_coordinates(self):
        m = base_model()
        out = apply_edit(m, EditOp(kind="set_value", term="bright:temp",
                                   value=0.0,
                                   range=[[0.6, np.inf], [-np.inf, 255.0]]))
        d = diff(m, out)
        assert set(d) == {"bright:temp"}
        assert d["bright:temp"][0][0] == (1, 0)

    def test_identical_models_empty_diff(self):
        m = base_model()
        assert diff(m, m) == {}

    def test_structural_mismatch_rejected(self):
        m = base_model()
        other = AdditiveModel(intercept=m.intercept, terms1d=m.terms1d[:1],
                              terms2d=())
        with pytest.raises(ValidationError):
            diff(m, other)


class TestExactness:
    def test_probability_shift_matches_logistic_algebra(self):
        # editing a bin by delta moves the logit by exactly delta there
        m = base_model()
        delta = 0.77
        out = apply_edit(m, EditOp(kind="shift", term="bright", delta=delta,
                                   range=[0.45, 0.55]))
        x = {"bright": 0.5, "temp": 265.0}
        z0 = m.raw_score(x)
        z1 = out.raw_score(x)
        assert z1 - z0 == pytest.approx(delta, abs=1e-9)
        p0, p1 = m.predict_proba(x), out.predict_proba(x)
        expected = 1.0 / (1.0 + np.exp(-(np.log(p0 / (1 - p0)) + delta)))
        assert p1 == pytest.approx(expected, abs=1e-9)

    def test_edit_op_round_trip(self):
        op = EditOp(kind="flatten_range", term="bright", range=[0.1, 0.9],
                    value="min_in_range", author="x", note="n",
                    applied_at="2021-02-03T04:05:06Z")
        assert EditOp.from_dict(op.to_dict()) == op

    def test_edit_op_rejects_unknown_keys(self):
        with pytest.raises(ValidationError):
            EditOp.from_dict({"kind": "shift", "term": "t", "delta": 1.0,
                              "surprise": True})
