"""Complexity scoring and easy-to-hard ordering of training patches.

A pixel's scattering complexity combines its entropy with how close its mean
alpha angle sits to the most ambiguous value (60 degrees, where surface,
volume, and double-bounce mechanisms are hardest to separate)::

    c = sqrt(H^2 + (1 - |(alpha_bar - 60) / 60|)^2)

ranging from 0 (clean low-entropy surface return) to sqrt(2) (maximum
entropy at the ambiguous angle).  A patch scores the mean of its pixels.
Ranking sorts patches by that score, ascending and stable, and the batch
schedule feeds a classifier growing prefixes of the ranked list so training
sees easy samples first and hard ones only in later, larger batches.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .coherency import Patch
from .errors import EmptySetError, OutOfRangeError, ShapeMismatchError
from .halpha import ABSOLUTE_POWER_FLOOR, HAlpha, decompose_field

#: Mean-alpha angle (degrees) at which scattering is most ambiguous; the
#: angle term of the complexity score peaks here and falls off linearly.
ALPHA_PEAK_DEGREES = 60.0

#: Largest attainable complexity: entropy 1 at the peak angle.
MAX_COMPLEXITY = float(np.sqrt(2.0))


def complexity_from_fields(
    entropy: np.ndarray, alpha_bar: np.ndarray, valid: np.ndarray | None = None
) -> np.ndarray:
    """Pixel complexity from precomputed entropy / mean-alpha arrays.

    Invalid (no-return) pixels score 0: they carry no scattering structure,
    so they count as the easiest possible content.
    """
    entropy = np.asarray(entropy, dtype=np.float64)
    alpha_bar = np.asarray(alpha_bar, dtype=np.float64)
    angle_term = 1.0 - np.abs((alpha_bar - ALPHA_PEAK_DEGREES) / ALPHA_PEAK_DEGREES)
    score = np.hypot(entropy, angle_term)
    if valid is not None:
        score = np.where(valid, score, 0.0)
    return score


def pixel_complexity(h: HAlpha) -> float:
    """Complexity score of one decomposed pixel, in [0, sqrt(2)]."""
    if not h.valid:
        return 0.0
    return float(complexity_from_fields(h.entropy, h.alpha_bar))


def patch_complexities(
    patches: Sequence[Patch], power_floor: float = ABSOLUTE_POWER_FLOOR
) -> np.ndarray:
    """Mean pixel complexity of each patch, one batched decomposition.

    Patches are scored independently of any scene, so the power floor
    defaults to the absolute one.  Zero-power pixels keep their slot in the
    mean (score 0); the denominator is always the full pixel count.
    """
    if len(patches) == 0:
        return np.zeros(0)
    sizes = np.array([p.pixels.shape[0] * p.pixels.shape[1] for p in patches])
    flat = np.concatenate([p.pixels.reshape(-1, p.pixels.shape[-1]) for p in patches])
    h, abar, valid = decompose_field(flat, power_floor=power_floor)
    scores = complexity_from_fields(h, abar, valid)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    return np.add.reduceat(scores, starts) / sizes


def patch_complexity(patch: Patch, power_floor: float = ABSOLUTE_POWER_FLOOR) -> float:
    """Mean pixel complexity of one patch, in [0, sqrt(2)]."""
    return float(patch_complexities([patch], power_floor=power_floor)[0])


@dataclass(frozen=True, eq=False)
class RankedTrainingSet:
    """Patches sorted by complexity, easiest first.

    ``order[i]`` is the index the i-th ranked patch had in the original
    sequence (0-based), so ``order`` is a permutation recording the sort.
    ``scores`` are the matching complexity values, non-decreasing.
    """

    patches: tuple[Patch, ...]
    scores: np.ndarray
    order: np.ndarray

    def __post_init__(self):
        n = len(self.patches)
        if self.scores.shape != (n,) or self.order.shape != (n,):
            raise ShapeMismatchError(
                f"scores {self.scores.shape} and order {self.order.shape} "
                f"must both cover {n} patches"
            )
        if n and np.any(np.diff(self.scores) < 0.0):
            raise ValueError("ranked scores must be non-decreasing")
        if n and not np.array_equal(np.sort(self.order), np.arange(n)):
            raise ValueError("order must be a permutation of the original indices")

    def __len__(self) -> int:
        return len(self.patches)

    @property
    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.patches], dtype=np.int64)


def rank_patches(
    patches: Sequence[Patch], scores: np.ndarray | None = None
) -> RankedTrainingSet:
    """Sort patches by complexity, ascending; ties keep original order.

    Pass precomputed ``scores`` to re-rank a grown set without rescoring
    (patch content is immutable, so cached scores stay correct).

    Raises
    ------
    EmptySetError
        If ``patches`` is empty.
    """
    if len(patches) == 0:
        raise EmptySetError("cannot rank an empty training set")
    if scores is None:
        scores = patch_complexities(patches)
    else:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (len(patches),):
            raise ShapeMismatchError(
                f"got scores of shape {scores.shape} for {len(patches)} patches"
            )
    order = np.argsort(scores, kind="stable")
    return RankedTrainingSet(
        patches=tuple(patches[int(i)] for i in order),
        scores=scores[order],
        order=order,
    )


@dataclass(frozen=True, eq=False)
class BatchSchedule:
    """Prefix sizes m(1) <= ... <= m(n) of the accumulating batches."""

    total: int
    num_batches: int
    sizes: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.sizes) < 0):
            raise ValueError("batch sizes must be non-decreasing")
        if self.sizes[-1] != self.total:
            raise ValueError("the last batch must cover the whole set")


def prefix_sizes(total: int, num_batches: int) -> np.ndarray:
    """Accumulated batch sizes: m(k) = floor(k * total / num_batches).

    Integer arithmetic keeps m(num_batches) = total exactly.  When the set
    is smaller than the number of batches, sizes are clamped up to 1, so
    early batches repeat the easiest sample rather than being empty.
    """
    if total < 1:
        raise EmptySetError("schedule needs at least one sample")
    if num_batches < 1:
        raise OutOfRangeError("need at least one batch")
    k = np.arange(1, num_batches + 1, dtype=np.int64)
    return np.maximum(1, (k * total) // num_batches)


def batch_schedule(total: int, num_batches: int) -> BatchSchedule:
    return BatchSchedule(
        total=total, num_batches=num_batches, sizes=prefix_sizes(total, num_batches)
    )


def slice_batch(ranked: RankedTrainingSet, k: int, num_batches: int) -> tuple[Patch, ...]:
    """The k-th accumulated batch: the first m(k) patches of the ranking.

    Raises
    ------
    OutOfRangeError
        If ``k`` is outside [1, num_batches].
    """
    if not 1 <= k <= num_batches:
        raise OutOfRangeError(f"batch index {k} outside [1, {num_batches}]")
    sizes = prefix_sizes(len(ranked), num_batches)
    return ranked.patches[: int(sizes[k - 1])]


def write_ranking_csv(ranked: RankedTrainingSet, stream: TextIO) -> None:
    """Dump a ranking as CSV with columns orig_index, complexity, label.

    ``complexity`` is the patch score, written with full round-trip
    precision so identical rankings produce identical files.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["orig_index", "complexity", "label"])
    for idx, score, patch in zip(ranked.order, ranked.scores, ranked.patches):
        writer.writerow([int(idx), repr(float(score)), patch.label])
