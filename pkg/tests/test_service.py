"""HTTP editing service: endpoints, concurrency control, predictions."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from glassboost import AdditiveModel, FeatureConfig, ModelStore, Term1D, \
    Term2D, build_app, featurize_scene, model_from_dict, synth_scene, \
    SynthSpec


def service_model():
    bright = Term1D(feature="brightness",
                    edges=np.array([0.25, 0.5, 0.75]),
                    scores=np.array([-0.6, -0.1, 0.4, 1.0]),
                    error_bars=np.array([0.05, 0.03, 0.04, 0.08]))
    contrast = Term1D(feature="cool_contrast",
                      edges=np.array([0.2, 0.6]),
                      scores=np.array([-0.3, 0.2, 0.8]),
                      error_bars=np.array([0.02, 0.02, 0.05]))
    ir = Term1D(feature="infrared",
                edges=np.array([230.0, 250.0, 270.0]),
                scores=np.array([1.1, 0.5, -0.4, -0.9]),
                error_bars=np.array([0.06, 0.04, 0.03, 0.05]))
    pair = Term2D(feature_x="brightness", feature_y="infrared",
                  edges_x=np.array([0.5]), edges_y=np.array([250.0]),
                  scores=np.array([[-0.2, 0.1], [0.3, -0.1]]))
    return AdditiveModel(intercept=-3.0, terms1d=(bright, contrast, ir),
                         terms2d=(pair,))


@pytest.fixture()
def client():
    store = ModelStore()
    store.put(service_model())
    cfg = FeatureConfig(contrast_norm_max=2.5)
    scene = featurize_scene(synth_scene(SynthSpec(), seed=21), cfg)
    store.register_scene(scene)
    with TestClient(build_app(store)) as c:
        c.store = store
        yield c


class TestReads:
    def test_head(self, client):
        assert client.get("/api/head").json() == {"version": 0}

    def test_scenes(self, client):
        body = client.get("/api/scenes").json()
        assert len(body) == 1
        entry = body[0]
        assert entry["scene_id"] == "synth-00000021"
        assert entry["rows"] == 64
        assert entry["has_labels"] is True
        assert "brightness" in entry["channels"]

    def test_model_round_trips(self, client):
        body = client.get("/api/model/0")
        assert body.status_code == 200
        model = model_from_dict(body.json())
        assert model.intercept == -3.0
        assert len(model.terms1d) == 3

    def test_term_summaries(self, client):
        body = client.get("/api/model/0/terms").json()
        ids = [t["id"] for t in body]
        assert ids == ["brightness", "cool_contrast", "infrared",
                       "brightness:infrared"]
        by_id = {t["id"]: t for t in body}
        assert by_id["brightness"]["type"] == "1d"
        assert by_id["brightness"]["n_bins"] == 4
        assert by_id["brightness"]["max_abs_score"] == 1.0
        assert by_id["brightness:infrared"]["type"] == "2d"
        assert by_id["brightness:infrared"]["edited_bins"] == 0

    def test_term_detail_1d(self, client):
        body = client.get("/api/model/0/terms/infrared").json()
        assert body["feature"] == "infrared"
        assert body["scores"] == [1.1, 0.5, -0.4, -0.9]
        assert body["error_bars"] == [0.06, 0.04, 0.03, 0.05]

    def test_term_detail_2d_with_colon_id(self, client):
        body = client.get("/api/model/0/terms/brightness:infrared").json()
        assert body["feature_x"] == "brightness"
        assert body["scores"] == [[-0.2, 0.1], [0.3, -0.1]]

    def test_unknown_version_404(self, client):
        assert client.get("/api/model/9").status_code == 404

    def test_unknown_term_404(self, client):
        assert client.get("/api/model/0/terms/nope").status_code == 404


class TestEdits:
    def test_single_edit_advances_head(self, client):
        resp = client.post("/api/model/0/edits", json=[
            {"kind": "scale", "term": "infrared", "factor": 0.5,
             "author": "svc-test"},
        ])
        assert resp.status_code == 200
        body = resp.json()
        assert body["version"] == 1
        assert client.get("/api/head").json() == {"version": 1}
        assert [d["term"] for d in body["diff"]] == ["infrared"]
        assert body["diff"][0]["bins_changed"] == 4
        assert body["diff"][0]["max_abs_delta"] == pytest.approx(0.55)

    def test_applied_at_stamped_when_missing(self, client):
        client.post("/api/model/0/edits", json=[
            {"kind": "shift", "term": "brightness", "delta": 0.1},
        ])
        model = model_from_dict(client.get("/api/model/1").json())
        stamp = model.edit_log[0]["applied_at"]
        assert stamp and stamp.startswith("20")

    def test_client_applied_at_kept_verbatim(self, client):
        client.post("/api/model/0/edits", json=[
            {"kind": "shift", "term": "brightness", "delta": 0.1,
             "applied_at": "2021-09-09T09:09:09Z"},
        ])
        model = model_from_dict(client.get("/api/model/1").json())
        assert model.edit_log[0]["applied_at"] == "2021-09-09T09:09:09Z"

    def test_batch_registers_intermediate_versions(self, client):
        resp = client.post("/api/model/0/edits", json=[
            {"kind": "shift", "term": "brightness", "delta": 0.1},
            {"kind": "scale", "term": "brightness", "factor": 2.0},
            {"kind": "set_value", "term": "cool_contrast", "value": 0.0},
        ])
        assert resp.json()["version"] == 3
        for v in (1, 2, 3):
            assert client.get(f"/api/model/{v}").status_code == 200
        m2 = model_from_dict(client.get("/api/model/2").json())
        np.testing.assert_allclose(m2.term("brightness").scores,
                                   [(s + 0.1) * 2 for s in
                                    [-0.6, -0.1, 0.4, 1.0]])

    def test_stale_version_conflict(self, client):
        first = client.post("/api/model/0/edits", json=[
            {"kind": "shift", "term": "brightness", "delta": 0.1},
        ])
        assert first.status_code == 200
        second = client.post("/api/model/0/edits", json=[
            {"kind": "shift", "term": "brightness", "delta": -0.1},
        ])
        assert second.status_code == 409
        assert client.get("/api/head").json() == {"version": 1}

    def test_empty_body_400(self, client):
        assert client.post("/api/model/0/edits", json=[]).status_code == 400

    def test_invalid_op_400_and_head_unchanged(self, client):
        resp = client.post("/api/model/0/edits", json=[
            {"kind": "shift", "term": "brightness", "delta": 0.1},
            {"kind": "scale", "term": "missing-term", "factor": 2.0},
        ])
        assert resp.status_code == 400
        assert client.get("/api/head").json() == {"version": 0}

    def test_edit_then_revert_by_old_version_read(self, client):
        client.post("/api/model/0/edits", json=[
            {"kind": "set_value", "term": "infrared", "value": 0.0},
        ])
        old = model_from_dict(client.get("/api/model/0").json())
        assert old.term("infrared").scores.tolist() == [1.1, 0.5, -0.4, -0.9]


class TestPredict:
    def test_probability_and_binary_grids(self, client):
        resp = client.post("/api/predict", json={
            "version": 0, "scene_id": "synth-00000021", "threshold": 0.5,
        })
        assert resp.status_code == 200
        body = resp.json()
        grid = body["probability"]
        assert grid["rows"] == 64 and grid["cols"] == 64
        vals = np.asarray(grid["values"])
        assert vals.shape == (64, 64)
        assert vals.min() >= 0.0 and vals.max() <= 1.0
        binary = np.asarray(body["binary"]["values"])
        np.testing.assert_array_equal(binary, (vals >= 0.5).astype(float))

    def test_confusion_included_for_labeled_scene(self, client):
        body = client.post("/api/predict", json={
            "version": 0, "scene_id": "synth-00000021",
        }).json()
        counts = body["confusion"]["counts"]
        assert sum(counts.values()) == 64 * 64
        assert "POD" in body["confusion"]["scores"]

    def test_deterministic_repeat(self, client):
        payload = {"version": 0, "scene_id": "synth-00000021"}
        a = client.post("/api/predict", json=payload).content
        b = client.post("/api/predict", json=payload).content
        assert a == b

    def test_unknown_scene_404(self, client):
        resp = client.post("/api/predict", json={
            "version": 0, "scene_id": "ghost",
        })
        assert resp.status_code == 404

    def test_bad_threshold_400(self, client):
        resp = client.post("/api/predict", json={
            "version": 0, "scene_id": "synth-00000021", "threshold": 1.5,
        })
        assert resp.status_code == 400

    def test_edit_changes_prediction(self, client):
        payload = {"version": 0, "scene_id": "synth-00000021"}
        before = client.post("/api/predict", json=payload).json()
        client.post("/api/model/0/edits", json=[
            {"kind": "set_value", "term": "infrared", "value": 0.0},
        ])
        after = client.post("/api/predict", json={
            "version": 1, "scene_id": "synth-00000021",
        }).json()
        assert before["probability"]["values"] != \
            after["probability"]["values"]


class TestImportance:
    def test_grid_matches_library_call(self, client):
        resp = client.get("/api/importance", params={
            "version": 0, "scene_id": "synth-00000021", "term": "infrared",
        })
        assert resp.status_code == 200
        body = resp.json()
        scene = client.store.scene("synth-00000021")
        expected = service_model().importance_map("infrared",
                                                  scene.channels)
        np.testing.assert_allclose(np.asarray(body["grid"]["values"]),
                                   expected.values, atol=1e-12)
        assert body["grid"]["name"] == "importance:infrared"

    def test_pair_term_importance(self, client):
        resp = client.get("/api/importance", params={
            "version": 0, "scene_id": "synth-00000021",
            "term": "brightness:infrared",
        })
        assert resp.status_code == 200

    def test_unknown_term_400(self, client):
        resp = client.get("/api/importance", params={
            "version": 0, "scene_id": "synth-00000021", "term": "zzz",
        })
        assert resp.status_code == 400


class TestCors:
    def test_cross_origin_allowed(self, client):
        resp = client.get("/api/head",
                          headers={"Origin": "http://localhost:5173"})
        assert resp.headers.get("access-control-allow-origin") == "*"
