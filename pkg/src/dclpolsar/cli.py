"""Command-line front end.

Subcommands
-----------
``dcl synth``
    Synthesize a scene file and print per-class pixel counts.
``dcl rank``
    Rank every labeled patch of a scene by its complexity score.
``dcl score``
    Score the single patch centered at a given pixel.
``dcl decompose``
    Dump the per-pixel entropy/alpha decomposition as CSV.
``dcl run``
    Full experiment: curriculum and baseline training over repeated seeds,
    exported as OA curves, a summary, and classification maps.

Machine-readable output goes to files (or stdout for the small commands);
progress lines go to stderr.  Identical flags and seeds reproduce identical
outputs, except wall-clock fields: the per-stage seconds columns, the
runtime aggregates, and summary.json's ``started_at``.

The ``DCL_THREADS`` environment variable caps how many seeds of ``dcl run``
execute in parallel worker processes; unset or 1 means sequential.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent import futures
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .classifier import ModelConfig, classify_scene, init_model
from .coherency import Patch, SceneDataset
from .curriculum import patch_complexity, rank_patches
from .errors import DclError
from .halpha import decompose_field
from .patches import DEFAULT_PATCH_SIZE, PatchExtractionSpec, extract_patches, split_pools
from .sceneio import load_scene, save_scene, write_legend_csv, write_pgm
from .synthesis import DEFAULT_LOOKS, generate_scene, stripe_scene_spec
from .training import (
    METHOD_BASELINE,
    METHOD_CURRICULUM,
    BaselineConfig,
    DclConfig,
    TrainingLog,
    run_baseline,
    run_dcl,
    write_oa_curves,
)

_RUN_DEFAULTS = {
    "scene": None,
    "rows": 256,
    "cols": 256,
    "looks": DEFAULT_LOOKS,
    "scene_seed": 0,
    "patch_size": DEFAULT_PATCH_SIZE,
    "split": (0.6, 0.2, 0.2),
    "samples_per_stage": 100,
    "stages": 30,
    "num_batches": 25,
    "epochs_per_batch": 5,
    "batch_size": 25,
    "epochs": 10,
    "features": 16,
    "hidden": 64,
    "learning_rate": 0.01,
    "num_seeds": 10,
    "seed": 0,
    "outdir": None,
}


def _progress(message: str) -> None:
    print(f"[dcl] {message}", file=sys.stderr)


def _out_stream(path: str | None):
    return open(path, "w", newline="") if path else sys.stdout


def _complex_entry(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(value[0], value[1])
    raise DclError(f"{where}: covariance entries must be numbers or [re, im] pairs")


def _parse_covariance(data, name: str) -> np.ndarray:
    if not (isinstance(data, list) and len(data) == 3):
        raise DclError(f"class {name!r}: covariance must be a 3x3 array")
    out = np.zeros((3, 3), dtype=np.complex128)
    for i, row in enumerate(data):
        if not (isinstance(row, list) and len(row) == 3):
            raise DclError(f"class {name!r}: covariance must be a 3x3 array")
        for j, cell in enumerate(row):
            out[i, j] = _complex_entry(cell, f"class {name!r}")
    return out


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DclError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise DclError(f"{path}: top level must be a JSON object")
    return data


def _synth_spec(args):
    """Resolve synth inputs: optional JSON spec file, flags take precedence."""
    file_cfg = _load_json(args.spec) if args.spec else {}
    unknown = set(file_cfg) - {"rows", "cols", "looks", "seed", "classes"}
    if unknown:
        raise DclError(f"unknown spec keys: {', '.join(sorted(unknown))}")

    def pick(flag, key, fallback):
        if flag is not None:
            return flag
        return file_cfg.get(key, fallback)

    names = None
    sigmas = None
    if "classes" in file_cfg:
        classes = file_cfg["classes"]
        if not isinstance(classes, list) or not classes:
            raise DclError("spec 'classes' must be a non-empty list")
        names = []
        sigmas = []
        for i, entry in enumerate(classes):
            name = entry.get("name", f"class-{i}")
            if "covariance" not in entry:
                raise DclError(f"class {name!r}: missing covariance")
            names.append(name)
            sigmas.append(_parse_covariance(entry["covariance"], name))
        names = tuple(names)
        sigmas = tuple(sigmas)
    return stripe_scene_spec(
        rows=int(pick(args.rows, "rows", 256)),
        cols=int(pick(args.cols, "cols", 256)),
        looks=int(pick(args.looks, "looks", DEFAULT_LOOKS)),
        seed=int(pick(args.seed, "seed", 0)),
        class_names=names,
        covariances=sigmas,
    )


def cmd_synth(args) -> int:
    spec = _synth_spec(args)
    ds = generate_scene(spec)
    save_scene(ds, args.output)
    _progress(f"wrote {args.output} ({ds.rows}x{ds.cols}, {ds.num_classes} classes)")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["class_index", "name", "pixels"])
    counts = ds.class_counts()
    for i, name in enumerate(ds.class_names):
        writer.writerow([i, name, int(counts[i])])
    return 0


def cmd_rank(args) -> int:
    ds = load_scene(args.scene)
    patches = extract_patches(ds, PatchExtractionSpec(args.patch_size))
    ranked = rank_patches(patches)
    stream = _out_stream(args.output)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["orig_index", "row", "col", "label", "complexity"])
        for pos, patch in enumerate(ranked.patches):
            writer.writerow(
                [
                    int(ranked.order[pos]),
                    patch.origin[0],
                    patch.origin[1],
                    patch.label,
                    repr(float(ranked.scores[pos])),
                ]
            )
    finally:
        if stream is not sys.stdout:
            stream.close()
    _progress(f"ranked {len(ranked)} patches from {args.scene}")
    return 0


def _window(ds: SceneDataset, row: int, col: int, patch_size: int) -> Patch:
    half = patch_size // 2
    if not (half <= row < ds.rows - half and half <= col < ds.cols - half):
        raise DclError(
            f"center ({row}, {col}) leaves no full {patch_size}x{patch_size} "
            f"window inside a {ds.rows}x{ds.cols} scene"
        )
    pixels = ds.data[row - half : row + half + 1, col - half : col + half + 1]
    return Patch(pixels=pixels, label=int(ds.labels[row, col]), origin=(row, col))


def cmd_score(args) -> int:
    ds = load_scene(args.scene)
    patch = _window(ds, args.row, args.col, args.patch_size)
    print(repr(patch_complexity(patch)))
    return 0


def cmd_decompose(args) -> int:
    ds = load_scene(args.scene)
    entropy, alpha, valid = decompose_field(ds.data)
    stream = _out_stream(args.output)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["row", "col", "entropy", "alpha", "valid"])
        for r in range(ds.rows):
            for c in range(ds.cols):
                writer.writerow(
                    [r, c, repr(float(entropy[r, c])), repr(float(alpha[r, c])), int(valid[r, c])]
                )
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0


def _resolve_run_config(args) -> dict:
    cfg = dict(_RUN_DEFAULTS)
    if args.config:
        file_cfg = _load_json(args.config)
        unknown = set(file_cfg) - set(_RUN_DEFAULTS)
        if unknown:
            raise DclError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    for key in _RUN_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if isinstance(cfg["split"], str):
        cfg["split"] = tuple(float(f) for f in cfg["split"].split(","))
    else:
        cfg["split"] = tuple(float(f) for f in cfg["split"])
    for key in (
        "rows", "cols", "looks", "scene_seed", "patch_size", "samples_per_stage",
        "stages", "num_batches", "epochs_per_batch", "batch_size", "epochs",
        "features", "hidden", "num_seeds", "seed",
    ):
        cfg[key] = int(cfg[key])
    cfg["learning_rate"] = float(cfg["learning_rate"])
    if cfg["num_seeds"] < 1:
        raise DclError("num_seeds must be at least 1")
    if cfg["outdir"] is None:
        raise DclError("an output directory is required (-o/--outdir)")
    return cfg


def _worker_count(num_seeds: int) -> int:
    raw = os.environ.get("DCL_THREADS", "").strip()
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise DclError(f"DCL_THREADS must be an integer, got {raw!r}")
    return max(1, min(cap, num_seeds))


def _run_seed(scene_path: str, cfg: dict, seed: int):
    """One full seed: shared draws, curriculum then baseline, same init.

    Module-level so worker processes can import it by name.
    """
    ds = load_scene(scene_path)
    patches = extract_patches(ds, PatchExtractionSpec(cfg["patch_size"]))
    train_pool, _validation, test_pool = split_pools(patches, cfg["split"], seed=seed)
    model_cfg = ModelConfig(
        num_classes=ds.num_classes,
        patch_size=cfg["patch_size"],
        features=cfg["features"],
        hidden=cfg["hidden"],
        learning_rate=cfg["learning_rate"],
        seed=seed,
    )
    initial = init_model(model_cfg)
    dcl_model, dcl_log = run_dcl(
        train_pool,
        DclConfig(
            samples_per_stage=cfg["samples_per_stage"],
            stages=cfg["stages"],
            num_batches=cfg["num_batches"],
            epochs_per_batch=cfg["epochs_per_batch"],
            seed=seed,
        ),
        initial,
        eval_set=test_pool,
    )
    base_model, base_log = run_baseline(
        train_pool,
        BaselineConfig(
            samples_per_stage=cfg["samples_per_stage"],
            stages=cfg["stages"],
            batch_size=cfg["batch_size"],
            epochs=cfg["epochs"],
            seed=seed,
        ),
        initial,
        eval_set=test_pool,
    )
    return dcl_log, base_log, dcl_model, base_model


def _method_summary(logs: list[TrainingLog]) -> dict:
    finals = [log.final_accuracy for log in logs]
    seconds = [log.total_seconds for log in logs]
    return {
        "seeds": [log.seed for log in logs],
        "final_oa": finals,
        "final_oa_mean": float(np.mean(finals)) if finals else None,
        "final_oa_std": float(np.std(finals)) if finals else None,
        "total_seconds": seconds,
        "total_seconds_mean": float(np.mean(seconds)) if seconds else None,
        "total_seconds_sum": float(np.sum(seconds)) if seconds else None,
    }


def cmd_run(args) -> int:
    cfg = _resolve_run_config(args)
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    started_at = datetime.now(timezone.utc).isoformat()

    scene_path = cfg["scene"]
    if scene_path is None:
        spec = stripe_scene_spec(
            cfg["rows"], cfg["cols"], looks=cfg["looks"], seed=cfg["scene_seed"]
        )
        ds = generate_scene(spec)
        scene_path = str(outdir / "scene.dcls")
        save_scene(ds, scene_path)
        _progress(f"synthesized scene {ds.rows}x{ds.cols} -> {scene_path}")
    else:
        ds = load_scene(scene_path)

    seeds = [cfg["seed"] + s for s in range(cfg["num_seeds"])]
    workers = _worker_count(len(seeds))
    results: dict[int, tuple] = {}
    failures: dict[int, str] = {}
    if workers > 1:
        _progress(f"running {len(seeds)} seeds on {workers} workers")
        with futures.ProcessPoolExecutor(max_workers=workers) as pool:
            pending = {
                pool.submit(_run_seed, scene_path, cfg, seed): seed for seed in seeds
            }
            for done in futures.as_completed(pending):
                seed = pending[done]
                try:
                    results[seed] = done.result()
                except (DclError, ValueError) as exc:
                    failures[seed] = str(exc)
                    _progress(f"seed {seed} failed: {exc}")
    else:
        for seed in seeds:
            try:
                results[seed] = _run_seed(scene_path, cfg, seed)
            except (DclError, ValueError) as exc:
                failures[seed] = str(exc)
                _progress(f"seed {seed} failed: {exc}")

    completed = [s for s in seeds if s in results]
    for seed in completed:
        dcl_log, base_log = results[seed][0], results[seed][1]
        _progress(
            f"seed {seed}: curriculum OA {dcl_log.final_accuracy:.4f} "
            f"({dcl_log.total_seconds:.1f}s), baseline OA "
            f"{base_log.final_accuracy:.4f} ({base_log.total_seconds:.1f}s)"
        )

    dcl_logs = [results[s][0] for s in completed]
    base_logs = [results[s][1] for s in completed]
    with open(outdir / "oa_curves.csv", "w", newline="") as fh:
        write_oa_curves([*dcl_logs, *base_logs], fh)

    with open(outdir / "legend.csv", "w", newline="") as fh:
        write_legend_csv(ds.class_names, fh)

    maps_seed = None
    if completed:
        maps_seed = completed[0]
        for model, method in (
            (results[maps_seed][2], METHOD_CURRICULUM),
            (results[maps_seed][3], METHOD_BASELINE),
        ):
            raster = classify_scene(model, ds.data)
            write_pgm(raster, outdir / f"map_{method}.pgm")
        _progress(f"classification maps from seed {maps_seed}")

    summary = {
        "started_at": started_at,
        "scene": str(scene_path),
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()},
        "seeds": seeds,
        "completed_seeds": completed,
        "failed_seeds": [{"seed": s, "error": failures[s]} for s in sorted(failures)],
        "maps_seed": maps_seed,
        "methods": {
            METHOD_CURRICULUM: _method_summary(dcl_logs),
            METHOD_BASELINE: _method_summary(base_logs),
        },
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _progress(f"results in {outdir}")
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcl",
        description="Curriculum learning pipeline for polarimetric SAR patches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="synthesize a scene file")
    synth.add_argument("--rows", type=int, default=None)
    synth.add_argument("--cols", type=int, default=None)
    synth.add_argument("--looks", type=int, default=None)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument(
        "--spec", default=None, help="JSON file with rows/cols/looks/seed/classes"
    )
    synth.add_argument("-o", "--output", required=True, help="scene file to write")
    synth.set_defaults(func=cmd_synth)

    rank = sub.add_parser("rank", help="rank labeled patches by complexity")
    rank.add_argument("scene", help="scene file")
    rank.add_argument("--patch-size", type=int, default=DEFAULT_PATCH_SIZE)
    rank.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    rank.set_defaults(func=cmd_rank)

    score = sub.add_parser("score", help="score the patch centered at a pixel")
    score.add_argument("scene", help="scene file")
    score.add_argument("--row", type=int, required=True)
    score.add_argument("--col", type=int, required=True)
    score.add_argument("--patch-size", type=int, default=DEFAULT_PATCH_SIZE)
    score.set_defaults(func=cmd_score)

    decompose = sub.add_parser("decompose", help="per-pixel entropy/alpha CSV")
    decompose.add_argument("scene", help="scene file")
    decompose.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    decompose.set_defaults(func=cmd_decompose)

    run = sub.add_parser("run", help="curriculum vs baseline experiment")
    run.add_argument("--config", default=None, help="JSON config; flags override it")
    run.add_argument("--scene", default=None, help="existing scene file to use")
    run.add_argument("--rows", type=int, default=None)
    run.add_argument("--cols", type=int, default=None)
    run.add_argument("--looks", type=int, default=None)
    run.add_argument("--scene-seed", type=int, default=None)
    run.add_argument("--patch-size", type=int, default=None)
    run.add_argument("--split", default=None, help="train,validation,test fractions")
    run.add_argument("--samples-per-stage", type=int, default=None)
    run.add_argument("--stages", type=int, default=None)
    run.add_argument("--num-batches", type=int, default=None)
    run.add_argument("--epochs-per-batch", type=int, default=None)
    run.add_argument("--batch-size", type=int, default=None)
    run.add_argument("--epochs", type=int, default=None)
    run.add_argument("--features", type=int, default=None)
    run.add_argument("--hidden", type=int, default=None)
    run.add_argument("--learning-rate", type=float, default=None)
    run.add_argument("--num-seeds", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("-o", "--outdir", default=None, help="results directory")
    run.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DclError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
