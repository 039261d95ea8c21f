"""JSON-over-HTTP API exposing the versioned model store to the editor UI.

Read endpoints serve model versions, term data, predictions, and importance
maps; the single write endpoint applies edit batches with optimistic
concurrency (the request names the version it edited; a stale version is a
409). Stored versions are never mutated, so reads need no locking.
"""

from __future__ import annotations

from datetime import datetime, timezone

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .edit import EditOp, apply_edit, diff
from .errors import ValidationError
from .grids import ChannelGrid, Scene
from .metrics import confusion, skill_scores
from .model import AdditiveModel, Term1D, model_to_dict, _term1d_dict, _term2d_dict
from .store import ModelStore, StaleVersionError


def _grid_json(grid: ChannelGrid) -> dict:
    return {
        "name": grid.name,
        "rows": grid.rows,
        "cols": grid.cols,
        "resolution_km": grid.resolution_km,
        "units": grid.units,
        "values": [[float(v) for v in row] for row in grid.values],
    }


def _term_summary(term) -> dict:
    if isinstance(term, Term1D):
        return {
            "id": term.id,
            "type": "1d",
            "features": [term.feature],
            "n_bins": term.n_bins,
            "edited_bins": int(term.edited_mask.sum()),
            "max_abs_score": float(np.abs(term.scores).max()),
        }
    return {
        "id": term.id,
        "type": "2d",
        "features": [term.feature_x, term.feature_y],
        "n_bins": list(term.scores.shape),
        "edited_bins": int(term.edited_mask.sum()),
        "max_abs_score": float(np.abs(term.scores).max()),
    }


def _term_json(term) -> dict:
    if isinstance(term, Term1D):
        d = _term1d_dict(term)
        d["id"] = term.id
        d["type"] = "1d"
        return d
    d = _term2d_dict(term)
    d["id"] = term.id
    d["type"] = "2d"
    return d


def build_app(store: ModelStore, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="glassboost editing service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def get_model(version: int) -> AdditiveModel:
        try:
            return store.get(version)
        except ValidationError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    def get_scene(scene_id: str) -> Scene:
        try:
            return store.scene(scene_id)
        except ValidationError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/api/head")
    def head() -> dict:
        return {"version": store.head_version}

    @app.get("/api/scenes")
    def scenes() -> list[dict]:
        out = []
        for sid in store.scene_ids():
            scene = store.scene(sid)
            ref = next(iter(scene.channels.values()))
            out.append({
                "scene_id": sid,
                "rows": ref.rows,
                "cols": ref.cols,
                "channels": sorted(scene.channels),
                "has_labels": scene.labels is not None,
            })
        return out

    @app.get("/api/model/{version}")
    def model_json(version: int) -> dict:
        return model_to_dict(get_model(version))

    @app.get("/api/model/{version}/terms")
    def term_summaries(version: int) -> list[dict]:
        return [_term_summary(t) for t in get_model(version).terms()]

    @app.get("/api/model/{version}/terms/{term_id}")
    def term_detail(version: int, term_id: str) -> dict:
        model = get_model(version)
        try:
            term = model.term(term_id)
        except ValidationError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return _term_json(term)

    @app.post("/api/model/{version}/edits")
    async def post_edits(version: int, request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, list) or not body:
            raise HTTPException(
                status_code=400,
                detail="body must be a non-empty JSON array of edit ops",
            )
        base = get_model(version)
        try:
            chain = []
            current = base
            for raw in body:
                if not isinstance(raw, dict):
                    raise ValidationError(f"edit op must be an object, got {raw!r}")
                if not raw.get("applied_at"):
                    raw = dict(raw)
                    raw["applied_at"] = datetime.now(timezone.utc).isoformat()
                current = apply_edit(current, EditOp.from_dict(raw))
                chain.append(current)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            store.advance(version, chain)
        except StaleVersionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        head_model = chain[-1]
        changes = diff(base, head_model)
        summary = [
            {
                "term": tid,
                "bins_changed": len(entries),
                "max_abs_delta": max(abs(b - a) for _, a, b in entries),
            }
            for tid, entries in sorted(changes.items())
        ]
        return {"version": head_model.version, "diff": summary}

    @app.post("/api/predict")
    async def predict(request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="body must be an object")
        for key in ("version", "scene_id"):
            if key not in body:
                raise HTTPException(status_code=400, detail=f"missing {key!r}")
        threshold = float(body.get("threshold", 0.5))
        if not 0.0 < threshold < 1.0:
            raise HTTPException(status_code=400,
                                detail=f"threshold must be in (0, 1), got {threshold}")
        model = get_model(int(body["version"]))
        scene = get_scene(str(body["scene_id"]))
        try:
            proba = model.predict_grid(scene.channels)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        binary = ChannelGrid(
            "prediction",
            (proba.values >= threshold).astype(np.float64),
            proba.resolution_km,
            "binary",
        )
        out = {
            "version": model.version,
            "scene_id": scene.scene_id,
            "threshold": threshold,
            "probability": _grid_json(proba),
            "binary": _grid_json(binary),
        }
        if scene.labels is not None:
            counts = confusion(proba, scene.labels, threshold)
            out["confusion"] = {
                "counts": counts.to_dict(),
                "scores": skill_scores(counts),
            }
        return out

    @app.get("/api/importance")
    def importance(version: int = Query(...), scene_id: str = Query(...),
                   term: str = Query(...)) -> dict:
        model = get_model(version)
        scene = get_scene(scene_id)
        try:
            grid = model.importance_map(term, scene.channels)
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "version": model.version,
            "scene_id": scene.scene_id,
            "term": term,
            "grid": _grid_json(grid),
        }

    @app.exception_handler(ValidationError)
    def validation_handler(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
