"""Synthetic multi-look PolSAR scene generation.

Each pixel of class c draws L independent scattering vectors from the
circular complex Gaussian CN(0, Sigma_c) and averages their outer products::

    T = (1/L) sum_l k_l k_l^H,   k_l = Sigma_c^(1/2) z_l

which is exactly how a real sensor's L-look coherency estimate arises.  The
matrix square root comes from this package's own eigendecomposition, so one
factorization routine serves both analysis and synthesis.

The default five-class palette spans the entropy / mean-alpha plane: a clean
surface scatterer, a double-bounce scatterer, a fully depolarized volume,
and two partially mixed classes, laid out as vertical stripes.  Palette
matrices are generator inputs chosen for spread, not measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherency import (
    NUM_COMPONENTS,
    UNLABELED,
    CoherencyMatrix,
    SceneDataset,
    matrices_to_vectors,
)
from .errors import InvalidCovarianceError, ShapeMismatchError
from .halpha import eigendecompose

#: Looks of the default synthetic sensor; four matches common airborne data.
DEFAULT_LOOKS = 4

DEFAULT_CLASS_NAMES = (
    "surface",
    "double-bounce",
    "volume",
    "mixed-a",
    "mixed-b",
)


def default_covariances() -> tuple[np.ndarray, ...]:
    """Per-class mean coherency matrices of the default palette."""
    mixed_b = np.diag([0.4, 0.4, 0.2]).astype(complex)
    mixed_b[0, 1] = 0.15
    mixed_b[1, 0] = 0.15
    return (
        np.diag([0.9, 0.08, 0.02]).astype(complex),
        np.diag([0.08, 0.9, 0.02]).astype(complex),
        (np.eye(3) / 3.0).astype(complex),
        np.diag([0.5, 0.3, 0.2]).astype(complex),
        mixed_b,
    )


@dataclass(frozen=True)
class ClassRegion:
    """Half-open rectangle [row0, row1) x [col0, col1) painted with one class."""

    row0: int
    col0: int
    row1: int
    col1: int
    class_index: int

    def __post_init__(self):
        if self.row1 <= self.row0 or self.col1 <= self.col0:
            raise ValueError(f"region {self} is empty")
        if self.row0 < 0 or self.col0 < 0:
            raise ValueError(f"region {self} starts outside the scene")


@dataclass(frozen=True, eq=False)
class SceneSpec:
    """Everything needed to synthesize one scene reproducibly.

    Provide either ``regions`` (painted in order onto an unlabeled canvas)
    or a full ``label_map``; pixels left unlabeled get zero power.
    """

    rows: int
    cols: int
    class_names: tuple[str, ...]
    covariances: tuple[np.ndarray, ...]
    looks: int = DEFAULT_LOOKS
    regions: tuple[ClassRegion, ...] = ()
    label_map: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("scene must have positive dimensions")
        if self.looks < 1:
            raise ValueError("looks must be at least 1")
        if len(self.covariances) != len(self.class_names):
            raise ShapeMismatchError(
                f"{len(self.covariances)} covariances for "
                f"{len(self.class_names)} classes"
            )
        if (len(self.regions) > 0) == (self.label_map is not None):
            raise ValueError("provide exactly one of regions or label_map")


def stripe_scene_spec(
    rows: int,
    cols: int,
    looks: int = DEFAULT_LOOKS,
    seed: int = 0,
    class_names: tuple[str, ...] | None = None,
    covariances: tuple[np.ndarray, ...] | None = None,
) -> SceneSpec:
    """Palette laid out as equal-width vertical stripes.

    Without an explicit palette the five default classes are used.  Stripe
    widths differ by at most one column when cols is not a multiple of the
    class count.
    """
    names = DEFAULT_CLASS_NAMES if class_names is None else tuple(class_names)
    sigmas = default_covariances() if covariances is None else tuple(covariances)
    edges = np.linspace(0, cols, len(names) + 1).astype(int)
    regions = tuple(
        ClassRegion(row0=0, col0=int(edges[c]), row1=rows, col1=int(edges[c + 1]), class_index=c)
        for c in range(len(names))
    )
    return SceneSpec(
        rows=rows,
        cols=cols,
        class_names=names,
        covariances=sigmas,
        looks=looks,
        regions=regions,
        seed=seed,
    )


def _validate_covariance(sigma: np.ndarray, name: str) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.complex128)
    if sigma.shape != (3, 3):
        raise InvalidCovarianceError(f"class {name!r}: covariance must be 3x3")
    if not np.all(np.isfinite(sigma.view(np.float64))):
        raise InvalidCovarianceError(f"class {name!r}: covariance has NaN or Inf")
    scale = float(np.abs(sigma).max())
    if not np.allclose(sigma, np.conj(sigma.T), atol=1e-12 * max(scale, 1.0)):
        raise InvalidCovarianceError(f"class {name!r}: covariance is not Hermitian")
    trace = float(np.trace(sigma).real)
    if trace <= 0.0:
        raise InvalidCovarianceError(f"class {name!r}: covariance trace must be positive")
    smallest = float(np.linalg.eigvalsh(sigma)[0])
    if smallest < -1e-9 * trace:
        raise InvalidCovarianceError(
            f"class {name!r}: covariance is not positive semidefinite "
            f"(smallest eigenvalue {smallest:.3e})"
        )
    return sigma


def _matrix_sqrt(sigma: np.ndarray) -> np.ndarray:
    es = eigendecompose(CoherencyMatrix.from_matrix(sigma))
    return (es.eigvecs * np.sqrt(es.lambdas)) @ np.conj(es.eigvecs.T)


def _label_canvas(spec: SceneSpec) -> np.ndarray:
    if spec.label_map is not None:
        labels = np.asarray(spec.label_map, dtype=np.int32)
        if labels.shape != (spec.rows, spec.cols):
            raise ShapeMismatchError(
                f"label map {labels.shape} does not match scene "
                f"({spec.rows}, {spec.cols})"
            )
        return labels.copy()
    labels = np.full((spec.rows, spec.cols), UNLABELED, dtype=np.int32)
    for region in spec.regions:
        if region.row1 > spec.rows or region.col1 > spec.cols:
            raise ValueError(f"region {region} exceeds the scene bounds")
        if not 0 <= region.class_index < len(spec.class_names):
            raise ValueError(f"region {region} names an unknown class")
        labels[region.row0 : region.row1, region.col0 : region.col1] = region.class_index
    return labels


def generate_scene(spec: SceneSpec) -> SceneDataset:
    """Draw one seeded scene.

    Classes are sampled in ascending index order with a single generator,
    so the same spec always reproduces the same bytes.  Unlabeled pixels
    keep zero power (no-return).

    Raises
    ------
    InvalidCovarianceError
        Naming the offending class if its matrix fails validation.
    """
    sigmas = [
        _validate_covariance(sigma, name)
        for sigma, name in zip(spec.covariances, spec.class_names)
    ]
    labels = _label_canvas(spec)
    rng = np.random.default_rng(spec.seed)
    data = np.zeros((spec.rows, spec.cols, NUM_COMPONENTS))

    for c, sigma in enumerate(sigmas):
        mask = labels == c
        count = int(mask.sum())
        if count == 0:
            continue
        root = _matrix_sqrt(sigma)
        z = (
            rng.standard_normal((count, spec.looks, 3))
            + 1j * rng.standard_normal((count, spec.looks, 3))
        ) * np.sqrt(0.5)
        k = z @ root.T
        t = np.einsum("nlj,nlk->njk", k, np.conj(k)) / spec.looks
        data[mask] = matrices_to_vectors(t)

    return SceneDataset(data=data, labels=labels, class_names=tuple(spec.class_names))
