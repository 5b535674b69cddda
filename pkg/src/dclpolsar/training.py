"""Staged training loops: curriculum and no-curriculum, plus comparison.

Both methods label data the same way: at each stage a fixed number of
patches is drawn uniformly without replacement from the unlabeled pool and
joined to the labeled set.  The draw uses a dedicated random stream keyed
only by the seed, so a curriculum run and a baseline run with equal seeds
consume byte-identical stage samples; pacing and ordering are the only
difference between them.

Curriculum stages re-rank the labeled set by cached complexity scores and
train on its growing prefixes (easy samples first, repeated most).  Baseline
stages shuffle the labeled set and sweep it in fixed-size batches for a few
epochs.  Model weights persist across all stages and batches in both
methods; nothing is ever reinitialized.

Normalization statistics are pinned to the full first-stage sample set
before any gradient step.  The first accumulated curriculum batch holds only
a handful of easiest (near-duplicate, often single-class) patches; statistics
taken there are degenerate and would skew every later update.  Freezing on
the whole first draw gives both methods identical statistics under a shared
seed, keeping pacing and ordering the only difference.

Per-stage wall-clock seconds cover scoring, ranking, and training, not the
held-out evaluation, which is identical work for both methods.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .classifier import Model, evaluate, freeze_normalization, train_on_batch
from .coherency import Patch
from .curriculum import patch_complexities, rank_patches, slice_batch
from .errors import ExhaustedError, GridMismatchError

METHOD_CURRICULUM = "curriculum"
METHOD_BASELINE = "no-curriculum"

#: Child-stream tags appended to the seed: both methods draw stage samples
#: from stream 0, so equal seeds give equal draws; only the baseline uses
#: stream 1 (epoch shuffles), keeping the draw stream untouched by design.
_SAMPLING_STREAM = 0
_SHUFFLE_STREAM = 1


@dataclass(frozen=True)
class DclConfig:
    """Knobs of the curriculum loop."""

    samples_per_stage: int = 100
    stages: int = 30
    num_batches: int = 25
    epochs_per_batch: int = 5
    seed: int = 0

    def __post_init__(self):
        if min(self.samples_per_stage, self.stages, self.num_batches) < 1:
            raise ValueError("samples_per_stage, stages, and num_batches must be >= 1")
        if self.epochs_per_batch < 1:
            raise ValueError("epochs_per_batch must be >= 1")


@dataclass(frozen=True)
class BaselineConfig:
    """Knobs of the no-curriculum loop; sampling fields mirror DclConfig."""

    samples_per_stage: int = 100
    stages: int = 30
    batch_size: int = 25
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if min(self.samples_per_stage, self.stages, self.batch_size) < 1:
            raise ValueError("samples_per_stage, stages, and batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class StageRecord:
    """One stage's bookkeeping: sizes, accuracy, cost, loss trace.

    ``accuracy`` is NaN when the run had no held-out set to evaluate on.
    ``seconds`` excludes evaluation time.
    """

    stage: int
    num_labeled: int
    accuracy: float
    seconds: float
    losses: tuple[float, ...]


@dataclass(frozen=True)
class TrainingLog:
    """Full per-stage history of one run."""

    method: str
    seed: int
    stages: tuple[StageRecord, ...]

    def __post_init__(self):
        counts = [s.num_labeled for s in self.stages]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError("labeled-set size must grow every stage")

    @property
    def final_accuracy(self) -> float:
        return self.stages[-1].accuracy

    @property
    def total_seconds(self) -> float:
        return float(sum(s.seconds for s in self.stages))

    @property
    def sample_grid(self) -> tuple[int, ...]:
        return tuple(s.num_labeled for s in self.stages)


def _sampling_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, _SAMPLING_STREAM])


def _shuffle_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, _SHUFFLE_STREAM])


def _draw(
    pool: list[Patch], count: int, rng: np.random.Generator, stage: int
) -> tuple[list[Patch], list[Patch]]:
    """Uniform draw without replacement; returns (chosen, remaining pool)."""
    if count > len(pool):
        raise ExhaustedError(
            f"stage {stage} needs {count} samples but the pool holds {len(pool)}"
        )
    idx = rng.choice(len(pool), size=count, replace=False)
    keep = np.ones(len(pool), dtype=bool)
    keep[idx] = False
    chosen = [pool[int(i)] for i in idx]
    remaining = [p for p, k in zip(pool, keep) if k]
    return chosen, remaining


def stage_draws(pool_size: int, cfg_seed: int, samples: int, stages: int) -> list[np.ndarray]:
    """Indices each stage would draw from a pool of the given size.

    Exposed so tests and tooling can verify that two runs with equal seeds
    share their sample sequence without running any training.
    """
    rng = _sampling_rng(cfg_seed)
    remaining = np.arange(pool_size)
    out = []
    for stage in range(1, stages + 1):
        if samples > remaining.size:
            raise ExhaustedError(
                f"stage {stage} needs {samples} samples but the pool holds "
                f"{remaining.size}"
            )
        idx = rng.choice(remaining.size, size=samples, replace=False)
        out.append(remaining[idx])
        keep = np.ones(remaining.size, dtype=bool)
        keep[idx] = False
        remaining = remaining[keep]
    return out


def run_dcl(
    pool: Sequence[Patch],
    cfg: DclConfig,
    model: Model,
    eval_set: Sequence[Patch] | None = None,
) -> tuple[Model, TrainingLog]:
    """Curriculum training over ``cfg.stages`` stages.

    Each stage draws ``samples_per_stage`` patches into the labeled set,
    scores only the newcomers (scores are content-only and cached), re-ranks
    the whole set, and fine-tunes on its accumulating prefixes: the k-th of
    ``num_batches`` batches is the easiest floor(k*N/n) samples, trained for
    ``epochs_per_batch`` full-batch passes.  Normalization freezes on the
    whole stage-1 draw (see the module docstring).  The input pool and model
    are not mutated.

    Raises
    ------
    ExhaustedError
        When the pool cannot cover a stage's draw.
    """
    pool = list(pool)
    rng = _sampling_rng(cfg.seed)
    labeled: list[Patch] = []
    scores = np.zeros(0)
    records = []
    for stage in range(1, cfg.stages + 1):
        chosen, pool = _draw(pool, cfg.samples_per_stage, rng, stage)
        started = time.perf_counter()
        labeled.extend(chosen)
        if stage == 1:
            model = freeze_normalization(model, labeled)
        scores = np.concatenate([scores, patch_complexities(chosen)])
        ranked = rank_patches(labeled, scores=scores)
        stage_losses: list[float] = []
        for k in range(1, cfg.num_batches + 1):
            batch = slice_batch(ranked, k, cfg.num_batches)
            model, losses = train_on_batch(model, batch, cfg.epochs_per_batch)
            stage_losses.extend(losses)
        seconds = time.perf_counter() - started
        accuracy = evaluate(model, eval_set) if eval_set is not None else float("nan")
        records.append(
            StageRecord(
                stage=stage,
                num_labeled=len(labeled),
                accuracy=accuracy,
                seconds=seconds,
                losses=tuple(stage_losses),
            )
        )
    return model, TrainingLog(
        method=METHOD_CURRICULUM, seed=cfg.seed, stages=tuple(records)
    )


def run_baseline(
    pool: Sequence[Patch],
    cfg: BaselineConfig,
    model: Model,
    eval_set: Sequence[Patch] | None = None,
) -> tuple[Model, TrainingLog]:
    """No-curriculum training: same staged draws, shuffled fixed-size batches.

    Each stage reshuffles the labeled set once per epoch and sweeps it in
    ``batch_size`` chunks (the last chunk may be short), one gradient step
    per chunk, for ``epochs`` epochs.  Normalization freezes on the whole
    stage-1 draw, exactly as in :func:`run_dcl`.  With the seed matching a
    :func:`run_dcl` call, every stage sees the same new samples and the
    model carries the same frozen statistics.
    """
    pool = list(pool)
    rng = _sampling_rng(cfg.seed)
    shuffler = _shuffle_rng(cfg.seed)
    labeled: list[Patch] = []
    records = []
    for stage in range(1, cfg.stages + 1):
        chosen, pool = _draw(pool, cfg.samples_per_stage, rng, stage)
        started = time.perf_counter()
        labeled.extend(chosen)
        if stage == 1:
            model = freeze_normalization(model, labeled)
        stage_losses: list[float] = []
        for _epoch in range(cfg.epochs):
            perm = shuffler.permutation(len(labeled))
            for start in range(0, len(labeled), cfg.batch_size):
                batch = [labeled[int(i)] for i in perm[start : start + cfg.batch_size]]
                model, losses = train_on_batch(model, batch, epochs=1)
                stage_losses.extend(losses)
        seconds = time.perf_counter() - started
        accuracy = evaluate(model, eval_set) if eval_set is not None else float("nan")
        records.append(
            StageRecord(
                stage=stage,
                num_labeled=len(labeled),
                accuracy=accuracy,
                seconds=seconds,
                losses=tuple(stage_losses),
            )
        )
    return model, TrainingLog(
        method=METHOD_BASELINE, seed=cfg.seed, stages=tuple(records)
    )


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Aggregate view of repeated runs of two methods on one stage grid."""

    sample_grid: tuple[int, ...]
    methods: tuple[str, str]
    stage_mean_accuracy: tuple[np.ndarray, np.ndarray]
    final_accuracies: tuple[tuple[float, ...], tuple[float, ...]]
    final_mean: tuple[float, float]
    final_std: tuple[float, float]
    mean_total_seconds: tuple[float, float]

    @property
    def final_gap(self) -> float:
        """First method's final mean accuracy minus the second's."""
        return self.final_mean[0] - self.final_mean[1]


def _as_logs(logs) -> list[TrainingLog]:
    return [logs] if isinstance(logs, TrainingLog) else list(logs)


def compare_runs(logs_a, logs_b) -> ComparisonReport:
    """Aggregate two stacks of runs (single logs or per-seed lists).

    All logs must share one labeled-count grid; accuracy means and
    (population) standard deviations aggregate over the runs of each side.

    Raises
    ------
    GridMismatchError
        If any log covers a different sample grid.
    """
    sides = (_as_logs(logs_a), _as_logs(logs_b))
    if not sides[0] or not sides[1]:
        raise GridMismatchError("need at least one run per method")
    grid = sides[0][0].sample_grid
    for side in sides:
        for log in side:
            if log.sample_grid != grid:
                raise GridMismatchError(
                    f"run {log.method!r} seed {log.seed} covers grid "
                    f"{log.sample_grid}, expected {grid}"
                )
    per_stage = tuple(
        np.array([[s.accuracy for s in log.stages] for log in side]).mean(axis=0)
        for side in sides
    )
    finals = tuple(tuple(log.final_accuracy for log in side) for side in sides)
    return ComparisonReport(
        sample_grid=grid,
        methods=(sides[0][0].method, sides[1][0].method),
        stage_mean_accuracy=per_stage,
        final_accuracies=finals,
        final_mean=tuple(float(np.mean(f)) for f in finals),
        final_std=tuple(float(np.std(f)) for f in finals),
        mean_total_seconds=tuple(
            float(np.mean([log.total_seconds for log in side])) for side in sides
        ),
    )


def write_oa_curves(logs: Sequence[TrainingLog], stream: TextIO) -> None:
    """Serialize runs as CSV: method, seed, stage, n_samples, oa, seconds.

    Accuracy and seconds are written with full round-trip precision;
    reruns with equal seeds differ only in the seconds column.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["method", "seed", "stage", "n_samples", "oa", "seconds"])
    for log in logs:
        for record in log.stages:
            writer.writerow(
                [
                    log.method,
                    log.seed,
                    record.stage,
                    record.num_labeled,
                    repr(float(record.accuracy)),
                    repr(float(record.seconds)),
                ]
            )
