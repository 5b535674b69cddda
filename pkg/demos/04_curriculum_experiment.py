"""Curriculum against plain epoch training on one synthetic scene.

Runs both methods over a couple of seeds with shared stage draws, then
plots overall accuracy against the number of labeled samples.  This is a
scaled-down sibling of `dcl run`; expect a minute or two of compute.
Figure lands in demos/out/oa_curves.png.
"""

import pathlib
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dclpolsar import (
    BaselineConfig,
    DclConfig,
    ModelConfig,
    PatchExtractionSpec,
    compare_runs,
    extract_patches,
    generate_scene,
    init_model,
    run_baseline,
    run_dcl,
    split_pools,
    stripe_scene_spec,
)

OUT = pathlib.Path(__file__).parent / "out"
SEEDS = (0, 1)
STAGES = 6
PER_STAGE = 60


def main():
    ds = generate_scene(stripe_scene_spec(rows=128, cols=128, looks=4, seed=0))
    patches = extract_patches(ds, PatchExtractionSpec(patch_size=15))
    print(f"{len(patches)} patches available")

    dcl_logs, base_logs = [], []
    t0 = time.perf_counter()
    for seed in SEEDS:
        train_pool, _val, test_pool = split_pools(patches, (0.6, 0.2, 0.2), seed=seed)
        initial = init_model(ModelConfig(num_classes=ds.num_classes, seed=seed))
        _, dcl_log = run_dcl(
            train_pool,
            DclConfig(samples_per_stage=PER_STAGE, stages=STAGES, seed=seed),
            initial,
            eval_set=test_pool,
        )
        _, base_log = run_baseline(
            train_pool,
            BaselineConfig(samples_per_stage=PER_STAGE, stages=STAGES, seed=seed),
            initial,
            eval_set=test_pool,
        )
        dcl_logs.append(dcl_log)
        base_logs.append(base_log)
        print(
            f"seed {seed}: curriculum {dcl_log.final_accuracy:.4f} "
            f"vs baseline {base_log.final_accuracy:.4f}"
        )
    print(f"total {time.perf_counter() - t0:.1f}s")

    report = compare_runs(dcl_logs, base_logs)
    print(
        f"mean final OA: curriculum {report.final_mean[0]:.4f} "
        f"(std {report.final_std[0]:.4f}), baseline {report.final_mean[1]:.4f} "
        f"(std {report.final_std[1]:.4f}), gap {report.final_gap:+.4f}"
    )

    fig, ax = plt.subplots(figsize=(7, 4.5))
    grid = np.asarray(report.sample_grid)
    for curve, label in zip(report.stage_mean_accuracy, report.methods):
        ax.plot(grid, curve, marker="o", label=label)
    ax.set_xlabel("labeled samples")
    ax.set_ylabel("overall accuracy")
    ax.set_title(f"Mean over {len(SEEDS)} seeds, shared draws")
    ax.legend()
    ax.grid(alpha=0.3)
    OUT.mkdir(exist_ok=True)
    fig.savefig(OUT / "oa_curves.png", dpi=150, bbox_inches="tight")
    print(f"wrote {OUT / 'oa_curves.png'}")


if __name__ == "__main__":
    main()
