"""Append-only versioned model store backing the editing service.

Versions are immutable once registered; applying edits appends a new version
and advances head. Writes are serialized through one lock; reads need none
because stored models never change. An optional directory persists every
version as ``model_v{N}.json``.
"""

from __future__ import annotations

import os
import re
import threading

from .errors import ValidationError
from .grids import Scene, load_scene, list_scene_bundles
from .model import AdditiveModel, load_model, save_model

_MODEL_FILE = re.compile(r"^model(_v\d+)?\.json$")


class StaleVersionError(ValidationError):
    """An edit targeted a version that is no longer head."""


class ModelStore:
    """In-memory version map with optional directory persistence."""

    def __init__(self, persist_dir: str | None = None) -> None:
        self._versions: dict[int, AdditiveModel] = {}
        self._head: int | None = None
        self._scenes: dict[str, Scene] = {}
        self._lock = threading.Lock()
        self._persist_dir = persist_dir

    # -- versions ------------------------------------------------------

    @property
    def head_version(self) -> int:
        if self._head is None:
            raise ValidationError("store holds no models")
        return self._head

    def head(self) -> AdditiveModel:
        return self.get(self.head_version)

    def versions(self) -> list[int]:
        return sorted(self._versions)

    def get(self, version: int) -> AdditiveModel:
        try:
            return self._versions[version]
        except KeyError:
            raise ValidationError(f"unknown model version {version}") from None

    def put(self, model: AdditiveModel) -> None:
        """Register a model version; appends, never overwrites."""
        with self._lock:
            if model.version in self._versions:
                raise ValidationError(
                    f"version {model.version} already exists (store is append-only)"
                )
            if model.parent_version is not None \
                    and model.parent_version not in self._versions:
                raise ValidationError(
                    f"parent version {model.parent_version} not in store"
                )
            self._versions[model.version] = model
            if self._head is None or model.version > self._head:
                self._head = model.version
            if self._persist_dir is not None:
                save_model(model, os.path.join(
                    self._persist_dir, f"model_v{model.version}.json"
                ))

    def advance(self, expect_head: int, chain: list[AdditiveModel]) -> None:
        """Append a chain of new versions iff head is still ``expect_head``.

        The chain is the sequence of models produced by applying one batch of
        edits op by op; all of them are registered so every logged version
        stays addressable.
        """
        if not chain:
            raise ValidationError("empty version chain")
        with self._lock:
            if self._head != expect_head:
                raise StaleVersionError(
                    f"head is {self._head}, not {expect_head}; refresh and retry"
                )
            for model in chain:
                if model.version in self._versions:
                    raise ValidationError(f"version {model.version} already exists")
            for model in chain:
                self._versions[model.version] = model
            self._head = chain[-1].version
        if self._persist_dir is not None:
            for model in chain:
                save_model(model, os.path.join(
                    self._persist_dir, f"model_v{model.version}.json"
                ))

    def revert(self, to_version: int) -> AdditiveModel:
        """The stored model at ``to_version``; the store is not changed."""
        return self.get(to_version)

    # -- scenes ----------------------------------------------------------

    def register_scene(self, scene: Scene) -> None:
        self._scenes[scene.scene_id] = scene

    def scene(self, scene_id: str) -> Scene:
        try:
            return self._scenes[scene_id]
        except KeyError:
            raise ValidationError(f"unknown scene {scene_id!r}") from None

    def scene_ids(self) -> list[str]:
        return sorted(self._scenes)

    # -- loading ---------------------------------------------------------

    @classmethod
    def open(cls, model_path: str, scenes_dir: str | None = None,
             persist: bool = True) -> "ModelStore":
        """Build a store from a model file or a directory of model JSONs.

        A directory may hold ``model.json`` and any number of
        ``model_v{N}.json`` files; head becomes the highest version. New
        versions are persisted back into the directory when ``persist``.
        """
        if os.path.isdir(model_path):
            files = [f for f in sorted(os.listdir(model_path))
                     if _MODEL_FILE.match(f)]
            if not files:
                raise ValidationError(f"no model*.json files in {model_path}")
            store = cls(persist_dir=model_path if persist else None)
            models = [load_model(os.path.join(model_path, f)) for f in files]
            for m in sorted(models, key=lambda m: m.version):
                if m.version in store._versions:
                    raise ValidationError(
                        f"duplicate version {m.version} in {model_path}"
                    )
                store._versions[m.version] = m
                store._head = m.version if store._head is None \
                    else max(store._head, m.version)
        elif os.path.isfile(model_path):
            store = cls(persist_dir=None)
            store.put(load_model(model_path))
        else:
            raise ValidationError(f"model path not found: {model_path}")
        if scenes_dir is not None:
            for bundle in list_scene_bundles(scenes_dir):
                store.register_scene(load_scene(bundle))
        return store
