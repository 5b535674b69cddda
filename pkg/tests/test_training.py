"""Staged-training tests: pacing, shared draws, bookkeeping, aggregation."""

import csv
import io
import math
from types import SimpleNamespace

import numpy as np
import pytest

import dclpolsar.training as training
from dclpolsar.classifier import Model, ModelConfig, evaluate, init_model, train_on_batch
from dclpolsar.coherency import Patch, matrices_to_vectors
from dclpolsar.curriculum import patch_complexities
from dclpolsar.errors import ExhaustedError, GridMismatchError
from dclpolsar.training import (
    METHOD_BASELINE,
    METHOD_CURRICULUM,
    BaselineConfig,
    ComparisonReport,
    DclConfig,
    StageRecord,
    TrainingLog,
    compare_runs,
    run_baseline,
    run_dcl,
    stage_draws,
    write_oa_curves,
)

from oracles import random_coherency_stack

PATCH = 5
TINY = ModelConfig(num_classes=3, patch_size=PATCH, features=4, hidden=8, seed=1)


def make_pool(count, seed=0):
    rng = np.random.default_rng(seed)
    pool = []
    for i in range(count):
        matrices = random_coherency_stack(rng, PATCH * PATCH)
        pixels = matrices_to_vectors(matrices).reshape(PATCH, PATCH, 9)
        pool.append(Patch(pixels=pixels, label=int(rng.integers(0, 3)), origin=(i, 0)))
    return pool


class TrainSpy:
    """Wraps the real trainer, recording every call and its output model."""

    def __init__(self):
        self.calls = []

    def __call__(self, model, batch, epochs):
        out, losses = train_on_batch(model, batch, epochs)
        self.calls.append(
            SimpleNamespace(
                model_in=model, batch=list(batch), epochs=epochs, model_out=out
            )
        )
        return out, losses


class DrawSpy:
    """Wraps the stage draw, recording the chosen patches per stage."""

    def __init__(self):
        self.stages = []

    def __call__(self, pool, count, rng, stage):
        chosen, rest = training._REAL_DRAW(pool, count, rng, stage)
        self.stages.append(chosen)
        return chosen, rest


@pytest.fixture
def train_spy(monkeypatch):
    spy = TrainSpy()
    monkeypatch.setattr(training, "train_on_batch", spy)
    return spy


@pytest.fixture
def draw_spy(monkeypatch):
    monkeypatch.setattr(training, "_REAL_DRAW", training._draw, raising=False)
    spy = DrawSpy()
    monkeypatch.setattr(training, "_draw", spy)
    return spy


def test_single_stage_batch_sizes(train_spy):
    pool = make_pool(8)
    cfg = DclConfig(samples_per_stage=4, stages=1, num_batches=2, epochs_per_batch=5, seed=3)
    model, log = run_dcl(pool, cfg, init_model(TINY))
    sizes = [len(c.batch) for c in train_spy.calls]
    assert sizes == [2, 4]
    assert all(c.epochs == 5 for c in train_spy.calls)
    assert len(log.stages) == 1
    assert len(log.stages[0].losses) == 2 * 5


def test_batches_are_nested_prefixes(train_spy):
    pool = make_pool(12)
    cfg = DclConfig(samples_per_stage=9, stages=1, num_batches=3, epochs_per_batch=1, seed=0)
    run_dcl(pool, cfg, init_model(TINY))
    batches = [c.batch for c in train_spy.calls]
    assert [len(b) for b in batches] == [3, 6, 9]
    assert batches[0] == batches[1][: len(batches[0])]
    assert batches[1] == batches[2][: len(batches[1])]


def test_batches_are_ranked_easiest_first(train_spy):
    pool = make_pool(10, seed=4)
    cfg = DclConfig(samples_per_stage=10, stages=1, num_batches=4, epochs_per_batch=1, seed=0)
    run_dcl(pool, cfg, init_model(TINY))
    full = train_spy.calls[-1].batch
    scores = patch_complexities(full)
    assert np.all(np.diff(scores) >= 0)


def test_rerank_spans_all_stages(train_spy):
    # The final batch of stage 2 must be a global reordering of every sample
    # drawn so far, not stage 2's samples appended after stage 1's.
    pool = make_pool(12, seed=7)
    cfg = DclConfig(samples_per_stage=6, stages=2, num_batches=2, epochs_per_batch=1, seed=1)
    run_dcl(pool, cfg, init_model(TINY))
    last = train_spy.calls[-1].batch
    assert len(last) == 12
    scores = patch_complexities(last)
    assert np.all(np.diff(scores) >= 0)


def test_weights_persist_across_batches_and_stages(train_spy):
    pool = make_pool(10)
    cfg = DclConfig(samples_per_stage=5, stages=2, num_batches=2, epochs_per_batch=1, seed=2)
    run_dcl(pool, cfg, init_model(TINY))
    for prev, nxt in zip(train_spy.calls, train_spy.calls[1:]):
        assert nxt.model_in is prev.model_out


def test_inputs_not_mutated():
    pool = make_pool(8)
    before = list(pool)
    model = init_model(TINY)
    params = {k: v.copy() for k, v in model.params.items()}
    cfg = DclConfig(samples_per_stage=4, stages=2, num_batches=2, epochs_per_batch=1, seed=0)
    run_dcl(pool, cfg, model)
    assert pool == before
    for name, value in model.params.items():
        assert np.array_equal(value, params[name])


def test_labeled_counts_accumulate():
    pool = make_pool(12)
    cfg = DclConfig(samples_per_stage=3, stages=4, num_batches=2, epochs_per_batch=1, seed=5)
    _, log = run_dcl(pool, cfg, init_model(TINY))
    assert log.sample_grid == (3, 6, 9, 12)
    assert [s.stage for s in log.stages] == [1, 2, 3, 4]


def test_draws_partition_the_pool(draw_spy):
    pool = make_pool(12)
    cfg = DclConfig(samples_per_stage=4, stages=3, num_batches=2, epochs_per_batch=1, seed=8)
    run_dcl(pool, cfg, init_model(TINY))
    seen = [p for stage in draw_spy.stages for p in stage]
    assert len(seen) == 12
    assert len({id(p) for p in seen}) == 12


def test_same_seed_same_draws_across_methods(draw_spy):
    pool = make_pool(16)
    dcl_cfg = DclConfig(samples_per_stage=4, stages=3, num_batches=2, epochs_per_batch=1, seed=9)
    run_dcl(pool, dcl_cfg, init_model(TINY))
    dcl_draws = [list(s) for s in draw_spy.stages]
    draw_spy.stages.clear()
    base_cfg = BaselineConfig(samples_per_stage=4, stages=3, batch_size=2, epochs=1, seed=9)
    run_baseline(pool, base_cfg, init_model(TINY))
    assert draw_spy.stages == dcl_draws


def test_stage_draws_helper_matches_runs(draw_spy):
    pool = make_pool(10)
    cfg = DclConfig(samples_per_stage=3, stages=2, num_batches=2, epochs_per_batch=1, seed=11)
    run_dcl(pool, cfg, init_model(TINY))
    expected = stage_draws(len(pool), cfg.seed, cfg.samples_per_stage, cfg.stages)
    for chosen, idx in zip(draw_spy.stages, expected):
        assert chosen == [pool[int(i)] for i in idx]


def test_normalization_frozen_on_full_first_draw():
    # The first accumulated curriculum batch is a few near-duplicate easy
    # patches; statistics must come from the whole stage-1 draw instead,
    # and equal seeds must leave both methods with identical statistics.
    pool = make_pool(16)
    dcl_cfg = DclConfig(samples_per_stage=8, stages=2, num_batches=4, epochs_per_batch=1, seed=9)
    base_cfg = BaselineConfig(samples_per_stage=8, stages=2, batch_size=4, epochs=1, seed=9)
    dcl_model, _ = run_dcl(pool, dcl_cfg, init_model(TINY))
    base_model, _ = run_baseline(pool, base_cfg, init_model(TINY))

    idx = stage_draws(len(pool), 9, 8, 2)[0]
    expected = training.freeze_normalization(
        init_model(TINY), [pool[int(i)] for i in idx]
    )
    np.testing.assert_array_equal(dcl_model.norm_mean, expected.norm_mean)
    np.testing.assert_array_equal(dcl_model.norm_std, expected.norm_std)
    np.testing.assert_array_equal(base_model.norm_mean, expected.norm_mean)
    np.testing.assert_array_equal(base_model.norm_std, expected.norm_std)


def test_baseline_step_counts(train_spy):
    pool = make_pool(12)
    cfg = BaselineConfig(samples_per_stage=12, stages=1, batch_size=5, epochs=3, seed=0)
    _, log = run_baseline(pool, cfg, init_model(TINY))
    sizes = [len(c.batch) for c in train_spy.calls]
    assert sizes == [5, 5, 2] * 3
    assert all(c.epochs == 1 for c in train_spy.calls)
    assert len(log.stages[0].losses) == 9


def test_baseline_shuffle_differs_between_epochs(train_spy):
    pool = make_pool(12)
    cfg = BaselineConfig(samples_per_stage=12, stages=1, batch_size=4, epochs=2, seed=1)
    run_baseline(pool, cfg, init_model(TINY))
    epoch1 = [p for c in train_spy.calls[:3] for p in c.batch]
    epoch2 = [p for c in train_spy.calls[3:] for p in c.batch]
    assert sorted(map(id, epoch1)) == sorted(map(id, epoch2))
    assert epoch1 != epoch2


def test_baseline_sees_every_sample_each_epoch(train_spy):
    pool = make_pool(10)
    cfg = BaselineConfig(samples_per_stage=5, stages=2, batch_size=3, epochs=2, seed=2)
    run_baseline(pool, cfg, init_model(TINY))
    # stage 2 holds 10 labeled samples: epochs of ceil(10/3) = 4 batches
    stage2 = train_spy.calls[2 * 2 :]
    assert [len(c.batch) for c in stage2] == [3, 3, 3, 1] * 2
    for e in range(2):
        epoch = [p for c in stage2[e * 4 : (e + 1) * 4] for p in c.batch]
        assert len({id(p) for p in epoch}) == 10


def test_exhausted_pool_raises():
    pool = make_pool(5)
    cfg = DclConfig(samples_per_stage=4, stages=2, num_batches=2, epochs_per_batch=1, seed=0)
    with pytest.raises(ExhaustedError, match="stage 2"):
        run_dcl(pool, cfg, init_model(TINY))
    with pytest.raises(ExhaustedError, match="stage 2"):
        stage_draws(5, 0, 4, 2)


def test_determinism_same_seed_identical_history():
    pool = make_pool(10)
    eset = make_pool(6, seed=99)
    cfg = DclConfig(samples_per_stage=5, stages=2, num_batches=2, epochs_per_batch=2, seed=13)
    _, log_a = run_dcl(pool, cfg, init_model(TINY), eval_set=eset)
    _, log_b = run_dcl(pool, cfg, init_model(TINY), eval_set=eset)
    for a, b in zip(log_a.stages, log_b.stages):
        assert a.losses == b.losses
        assert a.accuracy == b.accuracy
        assert a.num_labeled == b.num_labeled


def test_accuracy_matches_standalone_evaluation():
    pool = make_pool(8)
    eset = make_pool(6, seed=42)
    cfg = DclConfig(samples_per_stage=8, stages=1, num_batches=2, epochs_per_batch=1, seed=0)
    model, log = run_dcl(pool, cfg, init_model(TINY), eval_set=eset)
    assert log.final_accuracy == evaluate(model, eset)


def test_no_eval_set_records_nan():
    pool = make_pool(6)
    cfg = BaselineConfig(samples_per_stage=3, stages=2, batch_size=2, epochs=1, seed=0)
    _, log = run_baseline(pool, cfg, init_model(TINY))
    assert all(math.isnan(s.accuracy) for s in log.stages)


def test_method_labels():
    pool = make_pool(6)
    _, d = run_dcl(pool, DclConfig(3, 1, 2, 1, 0), init_model(TINY))
    _, b = run_baseline(pool, BaselineConfig(3, 1, 2, 1, 0), init_model(TINY))
    assert d.method == METHOD_CURRICULUM == "curriculum"
    assert b.method == METHOD_BASELINE == "no-curriculum"


def test_config_validation():
    with pytest.raises(ValueError):
        DclConfig(samples_per_stage=0)
    with pytest.raises(ValueError):
        DclConfig(epochs_per_batch=0)
    with pytest.raises(ValueError):
        BaselineConfig(batch_size=0)
    with pytest.raises(ValueError):
        BaselineConfig(epochs=-1)


def test_training_log_rejects_shrinking_counts():
    rec = lambda stage, n: StageRecord(stage, n, 0.5, 0.0, (1.0,))
    with pytest.raises(ValueError):
        TrainingLog(method="curriculum", seed=0, stages=(rec(1, 5), rec(2, 5)))


def fake_log(method, seed, finals, grid=(10, 20)):
    stages = tuple(
        StageRecord(i + 1, n, acc, 1.0, (0.1,))
        for i, (n, acc) in enumerate(zip(grid, finals))
    )
    return TrainingLog(method=method, seed=seed, stages=stages)


def test_compare_runs_aggregates():
    a = [
        fake_log("curriculum", 0, (0.5, 0.9)),
        fake_log("curriculum", 1, (0.6, 0.8)),
    ]
    b = [
        fake_log("no-curriculum", 0, (0.4, 0.7)),
        fake_log("no-curriculum", 1, (0.5, 0.6)),
    ]
    report = compare_runs(a, b)
    assert report.sample_grid == (10, 20)
    assert report.methods == ("curriculum", "no-curriculum")
    assert report.final_accuracies == ((0.9, 0.8), (0.7, 0.6))
    assert report.final_mean == (pytest.approx(0.85), pytest.approx(0.65))
    assert report.final_std == (pytest.approx(0.05), pytest.approx(0.05))
    assert report.final_gap == pytest.approx(0.2)
    np.testing.assert_allclose(report.stage_mean_accuracy[0], [0.55, 0.85])
    np.testing.assert_allclose(report.stage_mean_accuracy[1], [0.45, 0.65])
    assert report.mean_total_seconds == (pytest.approx(2.0), pytest.approx(2.0))


def test_compare_runs_many_seeds_against_numpy():
    rng = np.random.default_rng(0)
    finals_a = rng.uniform(0.8, 1.0, size=10)
    finals_b = rng.uniform(0.6, 0.9, size=10)
    a = [fake_log("curriculum", s, (0.5, f)) for s, f in enumerate(finals_a)]
    b = [fake_log("no-curriculum", s, (0.5, f)) for s, f in enumerate(finals_b)]
    report = compare_runs(a, b)
    assert report.final_mean[0] == pytest.approx(float(np.mean(finals_a)), abs=1e-15)
    assert report.final_std[1] == pytest.approx(float(np.std(finals_b)), abs=1e-15)


def test_compare_runs_accepts_single_logs():
    a = fake_log("curriculum", 0, (0.5, 0.9))
    b = fake_log("no-curriculum", 0, (0.5, 0.9))
    report = compare_runs(a, b)
    assert report.final_gap == pytest.approx(0.0)
    assert report.final_std == (0.0, 0.0)


def test_compare_runs_grid_mismatch():
    a = fake_log("curriculum", 0, (0.5, 0.9), grid=(10, 20))
    b = fake_log("no-curriculum", 0, (0.5, 0.9), grid=(10, 30))
    with pytest.raises(GridMismatchError):
        compare_runs(a, b)
    with pytest.raises(GridMismatchError):
        compare_runs([a], [])


def test_write_oa_curves_round_trip():
    a = fake_log("curriculum", 7, (0.512345678901234, 0.9))
    buf = io.StringIO()
    write_oa_curves([a], buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["method", "seed", "stage", "n_samples", "oa", "seconds"]
    assert rows[1][:4] == ["curriculum", "7", "1", "10"]
    assert float(rows[1][4]) == 0.512345678901234
    assert len(rows) == 3


def test_oa_curves_identical_up_to_seconds():
    pool = make_pool(10)
    eset = make_pool(6, seed=5)
    cfg = DclConfig(samples_per_stage=5, stages=2, num_batches=2, epochs_per_batch=1, seed=21)
    logs = [run_dcl(pool, cfg, init_model(TINY), eval_set=eset)[1] for _ in range(2)]
    outs = []
    for log in logs:
        buf = io.StringIO()
        write_oa_curves([log], buf)
        rows = [r.rsplit(",", 1)[0] for r in buf.getvalue().splitlines()]
        outs.append(rows)
    assert outs[0] == outs[1]
