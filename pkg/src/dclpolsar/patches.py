"""Patch extraction and train/validation/test pool splitting.

A patch is a square window fully inside the scene whose center pixel is
labeled; the center's class labels the whole patch even though the window
may straddle a class boundary (windows are raw data, not masks).  Extracted
patches hold read-only views into the scene raster, never copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coherency import UNLABELED, Patch, SceneDataset
from .errors import InsufficientSamplesError, SceneTooSmallError

#: Window width used across the pipeline unless a spec overrides it.
DEFAULT_PATCH_SIZE = 15


@dataclass(frozen=True)
class PatchExtractionSpec:
    """Window geometry: odd width, center-pixel labeling, borders discarded."""

    patch_size: int = DEFAULT_PATCH_SIZE

    def __post_init__(self):
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError(f"patch_size must be odd and positive, got {self.patch_size}")

    @property
    def half(self) -> int:
        return self.patch_size // 2


def extract_patches(ds: SceneDataset, spec: PatchExtractionSpec) -> list[Patch]:
    """One patch per labeled pixel far enough from the border.

    Patches appear in row-major center order.  Each holds a zero-copy view
    of the scene (the scene array is read-only, so views are safe to share).

    Raises
    ------
    SceneTooSmallError
        If the scene is narrower than the window in either dimension.
    """
    size, half = spec.patch_size, spec.half
    if ds.rows < size or ds.cols < size:
        raise SceneTooSmallError(
            f"scene {ds.rows}x{ds.cols} cannot fit a {size}x{size} patch"
        )
    centers_r, centers_c = np.nonzero(ds.labels != UNLABELED)
    keep = (
        (centers_r >= half)
        & (centers_r < ds.rows - half)
        & (centers_c >= half)
        & (centers_c < ds.cols - half)
    )
    out = []
    for r, c in zip(centers_r[keep], centers_c[keep]):
        r, c = int(r), int(c)
        window = ds.data[r - half : r + half + 1, c - half : c + half + 1, :]
        out.append(Patch(pixels=window, label=int(ds.labels[r, c]), origin=(r, c)))
    return out


def _allocate(count: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder split of ``count`` items over the fractions.

    Every split with a nonzero fraction receives at least one item; callers
    must ensure ``count`` covers them.
    """
    exact = [f * count for f in fractions]
    base = [int(np.floor(e)) for e in exact]
    leftover = count - sum(base)
    by_remainder = sorted(
        range(len(fractions)), key=lambda i: (exact[i] - base[i], -i), reverse=True
    )
    for i in by_remainder[:leftover]:
        base[i] += 1
    for i, f in enumerate(fractions):
        if f > 0.0 and base[i] == 0:
            donor = int(np.argmax(base))
            base[donor] -= 1
            base[i] += 1
    return base


def split_pools(
    patches: Sequence[Patch],
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> tuple[list[Patch], list[Patch], list[Patch]]:
    """Seeded stratified partition into (train pool, validation, test).

    Each class is shuffled and split by the fractions independently, so all
    three pools see every class in close to the requested proportion (within
    one sample per class).  Output order within each pool follows the input
    order, making the result independent of shuffle internals.

    Raises
    ------
    ValueError
        If the fractions do not sum to 1.
    InsufficientSamplesError
        If some class has fewer samples than there are nonzero fractions.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    if any(f < 0.0 for f in fractions):
        raise ValueError(f"fractions must be non-negative, got {fractions}")
    labels = np.array([p.label for p in patches], dtype=np.int64)
    rng = np.random.default_rng(seed)
    pools: tuple[list[int], list[int], list[int]] = ([], [], [])
    needed = sum(1 for f in fractions if f > 0.0)
    for c in np.unique(labels):
        indices = np.nonzero(labels == c)[0]
        if indices.size < needed:
            raise InsufficientSamplesError(
                f"class {int(c)} has {indices.size} samples, "
                f"needs at least {needed} to appear in every split"
            )
        rng.shuffle(indices)
        counts = _allocate(int(indices.size), fractions)
        start = 0
        for pool, take in zip(pools, counts):
            pool.extend(int(i) for i in indices[start : start + take])
            start += take
    return tuple([patches[i] for i in sorted(pool)] for pool in pools)
