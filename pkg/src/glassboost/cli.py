"""Command-line entry point tying the pipeline stages together.

One subcommand per stage: synth, featurize, train, predict, edit, evaluate,
serve. Every run writes its primary outputs plus a ``run_manifest.json``
(atomically) into the output directory. Exit codes: 1 usage, 2 I/O,
3 validation, 4 internal.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone

from . import __version__
from .edit import EditOp, apply_edits
from .errors import StateError, ValidationError
from .features import FeatureConfig, FEATURE_NAMES, featurize_scene, \
    fit_contrast_norm, sza_filter
from .grids import flatten_scenes, list_scene_bundles, load_scene, save_scene
from .metrics import emit_maps, evaluate_scene, skill_scores, ConfusionCounts
from .model import deserialize, load_model, save_model, serialize
from .synth import SynthSpec, synth_scene
from .train import TrainConfig, train_with_report

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}"
            ) from exc


def _write_json(obj, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _config_hash(obj) -> str:
    return _sha256(json.dumps(obj, sort_keys=True).encode("utf-8"))


def _write_manifest(out_dir: str, command: str, args: argparse.Namespace,
                    started: float, inputs: list[str], outputs: list[str],
                    config_hashes: dict[str, str]) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config_hashes": config_hashes,
        "inputs": inputs,
        "outputs": outputs,
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "wall_time_s": round(time.monotonic() - started, 3),
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(manifest, os.path.join(out_dir, "run_manifest.json"))


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        if args.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        return args.jobs
    return os.cpu_count() or 1


def _map_scenes(fn, items, jobs: int):
    """Order-preserving map, process-parallel when jobs > 1."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (jobs * 4))))


# -- subcommands -------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    started = time.monotonic()
    spec_dict = _read_json(args.config) if args.config else {}
    spec = SynthSpec.from_dict(spec_dict)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for i in range(args.n):
        scene = synth_scene(spec, seed=args.seed + i)
        outputs.append(save_scene(scene, args.out))
    hashes = {"synth_spec": _config_hash(spec_dict)}
    _write_manifest(args.out, "synth", args, started, [], outputs, hashes)
    print(f"wrote {args.n} scenes to {args.out}")
    return 0


def _featurize_one(job) -> str:
    bundle, cfg_dict, out_dir, impute = job
    cfg = FeatureConfig.from_dict(cfg_dict)
    scene = load_scene(bundle, impute=impute)
    feat = featurize_scene(scene, cfg)
    return save_scene(feat, out_dir)


def cmd_featurize(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg_dict = _read_json(args.config) if args.config else {}
    cfg = FeatureConfig.from_dict(cfg_dict)
    bundles = list_scene_bundles(args.input)
    if not bundles:
        raise ValidationError(f"no scene bundles under {args.input}")
    scenes = [load_scene(b, impute=args.impute) for b in bundles]
    kept = sza_filter(scenes, cfg.sza_cutoff_deg)
    dropped = len(scenes) - len(kept)
    if dropped:
        logger.info("solar zenith filter removed %d scene(s)", dropped)
    if not kept:
        raise ValidationError("all scenes removed by the solar zenith filter")
    if cfg.contrast_norm_max is None:
        cfg.contrast_norm_max = fit_contrast_norm(kept, cfg)
        if cfg.contrast_norm_max <= 0:
            raise StateError(
                "fitted contrast_norm_max is 0 (all tiles constant); "
                "cool contrast cannot be normalized"
            )
    os.makedirs(args.out, exist_ok=True)
    kept_ids = {id(s) for s in kept}
    kept_paths = [b for b, s in zip(bundles, scenes) if id(s) in kept_ids]
    jobs = _jobs(args)
    work = [(b, cfg.to_dict(), args.out, args.impute) for b in kept_paths]
    outputs = _map_scenes(_featurize_one, work, jobs)
    cfg_path = os.path.join(args.out, "feature_config.json")
    _write_json(cfg.to_dict(), cfg_path)
    hashes = {"feature_config": _config_hash(cfg.to_dict())}
    _write_manifest(args.out, "featurize", args, started, bundles,
                    outputs + [cfg_path], hashes)
    print(f"featurized {len(outputs)} scenes to {args.out} "
          f"(contrast_norm_max={cfg.contrast_norm_max:.6g})")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg_dict = _read_json(args.config) if args.config else {}
    cfg = TrainConfig.from_dict(cfg_dict)
    if args.seed is not None:
        cfg.seed = args.seed
    bundles = list_scene_bundles(args.input)
    if not bundles:
        raise ValidationError(f"no scene bundles under {args.input}")
    scenes = [load_scene(b) for b in bundles]
    table = flatten_scenes(scenes, FEATURE_NAMES)
    fc_path = os.path.join(args.input, "feature_config.json")
    fc_ref = None
    if os.path.isfile(fc_path):
        fc_ref = _config_hash(_read_json(fc_path))
    model, report = train_with_report(table, cfg, feature_config_ref=fc_ref)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    save_model(model, model_path)
    report_path = os.path.join(args.out, "train_report.json")
    _write_json(report.to_dict(), report_path)
    if fc_ref is not None:
        _write_json(_read_json(fc_path), os.path.join(args.out, "feature_config.json"))
    hashes = {"train_config": _config_hash(cfg.to_dict())}
    if fc_ref:
        hashes["feature_config"] = fc_ref
    _write_manifest(args.out, "train", args, started, bundles,
                    [model_path, report_path], hashes)
    n2d = len(model.terms2d)
    print(f"trained on {len(table)} pixels: {len(model.terms1d)} main terms, "
          f"{n2d} pair terms -> {model_path}")
    return 0


def _predict_one(job) -> str:
    bundle, model_bytes, out_dir, threshold = job
    model = deserialize(model_bytes)
    scene = load_scene(bundle)
    return emit_maps(model, scene, out_dir, threshold=threshold)


def cmd_predict(args: argparse.Namespace) -> int:
    started = time.monotonic()
    model = load_model(args.model)
    bundles = list_scene_bundles(args.scenes)
    if not bundles:
        raise ValidationError(f"no scene bundles under {args.scenes}")
    os.makedirs(args.out, exist_ok=True)
    model_bytes = serialize(model)
    work = [(b, model_bytes, args.out, args.threshold) for b in bundles]
    outputs = _map_scenes(_predict_one, work, _jobs(args))
    _write_manifest(args.out, "predict", args, started,
                    [args.model] + bundles, outputs, {})
    print(f"wrote maps for {len(outputs)} scenes to {args.out}")
    return 0


def cmd_edit(args: argparse.Namespace) -> int:
    started = time.monotonic()
    model = load_model(args.model)
    ops_raw = _read_json(args.ops_file)
    if not isinstance(ops_raw, list):
        raise ValidationError(f"{args.ops_file}: expected a JSON array of edit ops")
    ops = [EditOp.from_dict(d) for d in ops_raw]
    edited = apply_edits(model, ops)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "model.json")
    save_model(edited, out_path)
    _write_manifest(args.out, "edit", args, started,
                    [args.model, args.ops_file], [out_path],
                    {"ops": _config_hash(ops_raw)})
    print(f"applied {len(ops)} edit(s): version {model.version} -> "
          f"{edited.version} ({out_path})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    model = load_model(args.model)
    bundles = list_scene_bundles(args.scenes)
    if not bundles:
        raise ValidationError(f"no scene bundles under {args.scenes}")
    per_scene = []
    total = ConfusionCounts(0, 0, 0, 0)
    for bundle in bundles:
        scene = load_scene(bundle)
        counts = evaluate_scene(model, scene, threshold=args.threshold)
        total = total + counts
        per_scene.append({
            "scene_id": scene.scene_id,
            "counts": counts.to_dict(),
            "scores": skill_scores(counts),
        })
    report = {
        "threshold": args.threshold,
        "counts": total.to_dict(),
        "scores": skill_scores(total),
        "per_scene": per_scene,
    }
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "evaluation.json")
    _write_json(report, report_path)
    _write_manifest(args.out, "evaluate", args, started,
                    [args.model] + bundles, [report_path], {})
    scores = report["scores"]
    def fmt(v):
        return "undefined" if v is None else f"{v:.4f}"
    print(f"evaluated {len(bundles)} scenes at threshold {args.threshold}: "
          f"POD={fmt(scores['POD'])} FAR={fmt(scores['FAR'])} "
          f"CSI={fmt(scores['CSI'])}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import build_app
    from .store import ModelStore
    import uvicorn

    store = ModelStore.open(args.store, scenes_dir=args.scenes)
    app = build_app(store, ui_dir=args.ui_dir)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"--bind must be host:port, got {args.bind!r}")
    print(f"serving model versions {store.versions()} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


# -- argument parsing ---------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="glassboost",
                     description="Glass-box additive boosting pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic scene bundles")
    p.add_argument("--n", type=int, default=10, help="number of scenes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="SynthSpec JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", help="derive model features from raw scenes")
    p.add_argument("input", help="directory of raw scene bundles")
    p.add_argument("--config", help="FeatureConfig JSON file")
    p.add_argument("--impute", action="store_true",
                   help="impute NaN pixels with the channel mean")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="fit the model on featurized scenes")
    p.add_argument("input", help="directory of featurized scene bundles")
    p.add_argument("--config", help="TrainConfig JSON file")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write importance and prediction maps")
    p.add_argument("--model", required=True, help="model.json path")
    p.add_argument("--scenes", required=True, help="featurized scene bundles")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("edit", help="apply edit ops from a JSON file")
    p.add_argument("--model", required=True, help="model.json path")
    p.add_argument("ops_file", help="JSON array of edit ops")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("evaluate", help="confusion counts and skill scores")
    p.add_argument("--model", required=True, help="model.json path")
    p.add_argument("--scenes", required=True, help="featurized scene bundles")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the editing service")
    p.add_argument("--store", required=True,
                   help="model.json file or directory of model versions")
    p.add_argument("--scenes", default=None,
                   help="featurized scene bundles to register for preview")
    p.add_argument("--bind", default="127.0.0.1:8787")
    p.add_argument("--ui-dir", default=None,
                   help="static directory to mount at / (the editor UI)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
