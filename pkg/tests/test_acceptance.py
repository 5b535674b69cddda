"""Acceptance gate: one test per binding criterion, in order.

Each criterion prints a single `criterion N: PASS ...` line on success (run
with `-s` to see them); a pytest failure is the corresponding fail line.
Criteria 7 and 8 share one pair of full desk-scale experiment runs driven
through the command-line entry point, so this file takes several minutes.
"""

import json
import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from dclpolsar import (
    MAX_COMPLEXITY,
    ModelConfig,
    Patch,
    alpha_angles,
    complexity_from_fields,
    cross_entropy,
    entropy,
    forward,
    freeze_normalization,
    halpha_of_pixel,
    init_model,
    loss_and_gradients,
    matrices_to_vectors,
    mean_alpha,
    eigendecompose,
    patch_complexities,
    prefix_sizes,
    pseudo_probabilities,
    rank_patches,
    slice_batch,
    vector_to_matrix,
)
from dclpolsar.cli import main as cli_main

from oracles import entropy_base3_mp, eigvals3_hermitian, random_coherency_stack


def _pass(n, msg):
    print(f"criterion {n}: PASS  {msg}")


# --- criterion 1: invariant suite over 10,000 random PSD matrices ---------

def test_criterion_1_invariant_suite():
    started = time.perf_counter()
    rng = np.random.default_rng(20260817)
    stack = random_coherency_stack(rng, 10000, looks=4)
    stack *= (10.0 ** rng.uniform(-6, 6, size=10000))[:, None, None]
    vectors = matrices_to_vectors(stack)

    worst_recon = 0.0
    worst_psum = 0.0
    for vec in vectors:
        t = vector_to_matrix(vec)
        es = eigendecompose(t)
        m = t.to_matrix()
        trace = m.trace().real
        err = np.abs(es.reconstruct() - m).max()
        assert err <= 1e-9 * trace
        worst_recon = max(worst_recon, err / trace)

        p = pseudo_probabilities(es.lambdas)
        assert abs(p.sum() - 1.0) <= 1e-12
        worst_psum = max(worst_psum, abs(p.sum() - 1.0))

        h = entropy(p)
        assert 0.0 <= h <= 1.0
        abar = mean_alpha(p, alpha_angles(es))
        assert 0.0 <= abar <= 90.0

    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    _pass(
        1,
        f"10000 matrices, worst reconstruction {worst_recon:.2e} x trace, "
        f"worst |sum p - 1| {worst_psum:.2e}, {elapsed:.2f}s",
    )


# --- criterion 2: analytic anchors -----------------------------------------

def vec_of_diag(a, b, c):
    return np.array([a, b, c, 0, 0, 0, 0, 0, 0], dtype=np.float64)


def test_criterion_2_analytic_anchors():
    identity = halpha_of_pixel(vec_of_diag(1, 1, 1))
    assert abs(identity.entropy - 1.0) <= 1e-10
    assert abs(identity.alpha_bar - 60.0) <= 1e-10

    surface = halpha_of_pixel(vec_of_diag(1, 0, 0))
    assert surface.entropy == 0.0
    assert surface.alpha_bar == 0.0

    mixed = halpha_of_pixel(vec_of_diag(2, 1, 1))
    oracle = entropy_base3_mp([0.5, 0.25, 0.25])
    assert abs(mixed.entropy - oracle) <= 1e-9
    assert abs(mixed.alpha_bar - 45.0) <= 1e-10
    _pass(
        2,
        f"identity ({identity.entropy:.12f}, {identity.alpha_bar:.6f}), "
        f"diag(1,0,0) exact zeros, diag(2,1,1) H err "
        f"{abs(mixed.entropy - oracle):.2e}",
    )


# --- criterion 3: pixel-complexity boundary values --------------------------

def test_criterion_3_pixel_complexity_boundaries():
    top = float(complexity_from_fields(1.0, 60.0))
    assert top == float(np.sqrt(2.0)) == MAX_COMPLEXITY
    assert float(complexity_from_fields(0.0, 0.0)) == 0.0
    assert float(complexity_from_fields(0.0, 90.0)) == 0.5
    _pass(3, "(1,60)->sqrt(2), (0,0)->0, (0,90)->0.5, all exact")


# --- criteria 4 and 9 share one set of random patches ------------------------

@pytest.fixture(scope="module")
def random_patches():
    rng = np.random.default_rng(404)
    patches = []
    for i in range(200):
        stack = random_coherency_stack(rng, 81, looks=4)
        stack *= 10.0 ** rng.uniform(-2, 2)
        pixels = matrices_to_vectors(stack).reshape(9, 9, 9)
        patches.append(Patch(pixels=pixels, label=int(rng.integers(0, 5))))
    return patches


def brute_force_score(patch):
    total = 0.0
    for vec in patch.pixels.reshape(-1, 9):
        h = halpha_of_pixel(vec)
        if h.valid:
            total += math.hypot(h.entropy, 1.0 - abs((h.alpha_bar - 60.0) / 60.0))
    return total / patch.pixels.shape[0] / patch.pixels.shape[1]


def test_criterion_4_patch_score_oracle(random_patches):
    scores = patch_complexities(random_patches)
    oracle = np.array([brute_force_score(p) for p in random_patches])
    worst = np.abs(scores - oracle).max()
    assert worst <= 1e-12

    order = rank_patches(random_patches).order
    expected = np.argsort(oracle, kind="stable")
    assert np.array_equal(order, expected)

    # Tie the scalar entropy route to the fully independent oracle pair
    # (characteristic-polynomial eigenvalues + 50-digit entropy).
    rng = np.random.default_rng(7)
    sample = matrices_to_vectors(random_coherency_stack(rng, 300, looks=4))
    for vec in sample:
        lam = eigvals3_hermitian(vector_to_matrix(vec).to_matrix())
        h_oracle = entropy_base3_mp(lam / lam.sum())
        assert abs(halpha_of_pixel(vec).entropy - h_oracle) <= 1e-9

    _pass(4, f"200 patches, worst |score - oracle| {worst:.2e}, ranking exact")


# --- criterion 5: schedule properties ----------------------------------------

def test_criterion_5_schedule_properties(random_patches):
    rng = np.random.default_rng(55)
    for _ in range(1000):
        total = int(rng.integers(1, 10001))
        batches = int(rng.integers(1, total + 1))
        sizes = prefix_sizes(total, batches)
        assert len(sizes) == batches
        assert sizes[-1] == total
        assert sizes[0] >= 1
        assert np.all(np.diff(sizes) >= 0)
        assert list(sizes) == [max(1, (k * total) // batches) for k in range(1, batches + 1)]

    ranked = rank_patches(random_patches[:40])
    last = slice_batch(ranked, 4, 4)
    for k in (1, 2, 3):
        batch = slice_batch(ranked, k, 4)
        assert batch == last[: len(batch)]
    _pass(5, "1000 random (N, n) schedules nested, minimum 1, final == N")


# --- criterion 6: gradient check on the full-size classifier -----------------

def test_criterion_6_gradient_check():
    started = time.perf_counter()
    cfg = ModelConfig(num_classes=5, patch_size=15, seed=6)
    # Central differences are only a valid derivative probe while the loss
    # stays on one smooth piece of the ReLU / max-pool surface.  This data
    # seed keeps every activation well clear of a switching point at the
    # chosen step (observed agreement ~2e-9, five decades inside tolerance);
    # a kink inside the probe window shows up as errors around 1e-3.
    rng = np.random.default_rng(0)
    batch = []
    for label in range(4):
        stack = random_coherency_stack(rng, 225, looks=4)
        batch.append(
            Patch(pixels=matrices_to_vectors(stack).reshape(15, 15, 9), label=label)
        )
    model = freeze_normalization(init_model(cfg), batch)
    model = replace(model, params={k: v.copy() for k, v in model.params.items()})
    labels = np.array([p.label for p in batch])

    _, analytic = loss_and_gradients(model, batch)

    def loss_now():
        return cross_entropy(forward(model, batch), labels)

    step = 1e-6
    worst = 0.0
    for name, tensor in model.params.items():
        fd = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            keep = tensor[idx]
            tensor[idx] = keep + step
            up = loss_now()
            tensor[idx] = keep - step
            down = loss_now()
            tensor[idx] = keep
            fd[idx] = (up - down) / (2 * step)
        num = np.linalg.norm(analytic[name] - fd)
        den = max(np.linalg.norm(analytic[name]), np.linalg.norm(fd), 1e-300)
        rel = num / den
        assert rel < 1e-4, f"{name}: relative error {rel:.3e}"
        worst = max(worst, rel)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _pass(6, f"all 8 tensors, worst relative error {worst:.2e}, {elapsed:.1f}s")


# --- criteria 7 and 8: desk-scale experiment, run twice ----------------------

EXPERIMENT_FLAGS = [
    "run",
    "--rows", "256", "--cols", "256", "--looks", "4", "--scene-seed", "0",
    "--patch-size", "15",
    "--samples-per-stage", "100", "--stages", "10",
    "--num-batches", "25", "--epochs-per-batch", "5",
    "--batch-size", "25", "--epochs", "10",
    "--num-seeds", "5", "--seed", "0",
]


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    base = tmp_path_factory.mktemp("experiment")
    had_threads = os.environ.pop("DCL_THREADS", None)
    try:
        started = time.perf_counter()
        code_first = cli_main([*EXPERIMENT_FLAGS, "-o", str(base / "first")])
        elapsed = time.perf_counter() - started
        code_second = cli_main([*EXPERIMENT_FLAGS, "-o", str(base / "second")])
    finally:
        if had_threads is not None:
            os.environ["DCL_THREADS"] = had_threads
    assert code_first == 0 and code_second == 0
    return base, elapsed


def test_criterion_7_desk_scale_experiment(experiment):
    base, elapsed = experiment
    summary = json.loads((base / "first" / "summary.json").read_text())
    curriculum = summary["methods"]["curriculum"]
    baseline = summary["methods"]["no-curriculum"]
    assert len(curriculum["final_oa"]) == 5

    gap = curriculum["final_oa_mean"] - baseline["final_oa_mean"]
    assert curriculum["final_oa_mean"] >= 0.90
    assert gap >= -0.005
    assert elapsed < 900.0
    _pass(
        7,
        f"curriculum mean OA {curriculum['final_oa_mean']:.4f}, baseline "
        f"{baseline['final_oa_mean']:.4f}, signed gap {gap:+.4f}, "
        f"{elapsed:.0f}s",
    )


def test_criterion_8_determinism(experiment):
    base, _ = experiment

    def value_rows(path):
        # Per-stage seconds are wall-clock measurements, the CSV's only
        # timestamp-like field; everything before that column must be
        # byte-identical.
        return [line.rsplit(",", 1)[0] for line in path.read_text().splitlines()]

    first = value_rows(base / "first" / "oa_curves.csv")
    second = value_rows(base / "second" / "oa_curves.csv")
    assert len(first) == 2 * 5 * 10 + 1
    assert first == second
    _pass(8, f"{len(first) - 1} rows byte-identical outside the seconds column")


# --- criterion 9: ranking invariant under uniform scaling --------------------

def test_criterion_9_scale_invariant_ranking(random_patches):
    base_order = rank_patches(random_patches).order
    scaled = [
        Patch(pixels=p.pixels * 1e3, label=p.label, origin=p.origin)
        for p in random_patches
    ]
    scaled_order = rank_patches(scaled).order
    assert np.array_equal(base_order, scaled_order)
    _pass(9, "200-patch ranking unchanged under x1000 power scaling")
