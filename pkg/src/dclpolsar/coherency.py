"""Core PolSAR data model: coherency matrices, pixel vectors, patches, scenes.

A coherency matrix is the 3x3 Hermitian positive-semidefinite second-order
statistic carried by each pixel of a multi-look polarimetric SAR image.  Only
the upper triangle is stored; the lower triangle is implied by conjugation, so
a stored matrix can never drift away from Hermitian symmetry.

The flat 9-component real representation used throughout the package is::

    (t11, t22, t33, Re t12, Im t12, Re t13, Im t13, Re t23, Im t23)

Conversion between the two representations is a pure reordering: values
round-trip bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, ShapeMismatchError

#: Number of real components in the flat pixel representation.
NUM_COMPONENTS = 9

#: Label value marking pixels with no ground-truth class.
UNLABELED = -1

#: Relative tolerance for the positive-semidefinite check: the smallest
#: eigenvalue may not fall below ``-PSD_TOLERANCE * trace``.
PSD_TOLERANCE = 1e-9

COMPONENT_NAMES = (
    "t11", "t22", "t33",
    "re_t12", "im_t12",
    "re_t13", "im_t13",
    "re_t23", "im_t23",
)


@dataclass(frozen=True)
class CoherencyMatrix:
    """Upper triangle of a 3x3 Hermitian coherency matrix, in linear power.

    Diagonal entries are real backscattered powers; off-diagonal entries are
    complex cross-correlations.  Instances are immutable.
    """

    t11: float
    t22: float
    t33: float
    t12: complex = 0j
    t13: complex = 0j
    t23: complex = 0j

    @property
    def trace(self) -> float:
        return self.t11 + self.t22 + self.t33

    def to_matrix(self) -> np.ndarray:
        """Full 3x3 complex matrix with the conjugated lower triangle."""
        return np.array(
            [
                [self.t11, self.t12, self.t13],
                [np.conj(self.t12), self.t22, self.t23],
                [np.conj(self.t13), np.conj(self.t23), self.t33],
            ],
            dtype=np.complex128,
        )

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "CoherencyMatrix":
        """Build from a full 3x3 array, reading only the upper triangle."""
        m = np.asarray(m)
        if m.shape != (3, 3):
            raise ShapeMismatchError(f"expected a 3x3 matrix, got shape {m.shape}")
        return cls(
            t11=float(np.real(m[0, 0])),
            t22=float(np.real(m[1, 1])),
            t33=float(np.real(m[2, 2])),
            t12=complex(m[0, 1]),
            t13=complex(m[0, 2]),
            t23=complex(m[1, 2]),
        )

    def validate(self) -> None:
        """Check finiteness, non-negative diagonal, and PSD within tolerance.

        Raises
        ------
        NonFiniteError
            If any component is NaN or infinite.
        ValueError
            If a diagonal power is negative, or the smallest eigenvalue
            falls below ``-PSD_TOLERANCE * trace``.
        """
        values = matrix_to_vector(self)
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("coherency matrix contains NaN or Inf")
        if min(self.t11, self.t22, self.t33) < 0.0:
            raise ValueError("diagonal powers must be non-negative")
        smallest = float(np.linalg.eigvalsh(self.to_matrix())[0])
        if smallest < -PSD_TOLERANCE * max(self.trace, 0.0):
            raise ValueError(
                f"matrix is not positive semidefinite: smallest eigenvalue "
                f"{smallest:.3e} below tolerance for trace {self.trace:.3e}"
            )


def matrix_to_vector(t: CoherencyMatrix) -> np.ndarray:
    """Flatten a coherency matrix into its 9 real components.

    The component order is the module-level convention
    ``(t11, t22, t33, Re t12, Im t12, Re t13, Im t13, Re t23, Im t23)``.
    The mapping is a pure reordering, so no rounding occurs.
    """
    return np.array(
        [
            t.t11, t.t22, t.t33,
            t.t12.real, t.t12.imag,
            t.t13.real, t.t13.imag,
            t.t23.real, t.t23.imag,
        ],
        dtype=np.float64,
    )


def vector_to_matrix(v: np.ndarray) -> CoherencyMatrix:
    """Rebuild a coherency matrix from its 9 real components.

    Raises
    ------
    ShapeMismatchError
        If ``v`` does not have exactly 9 components.
    NonFiniteError
        If any component is NaN or infinite.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (NUM_COMPONENTS,):
        raise ShapeMismatchError(f"expected {NUM_COMPONENTS} components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("pixel vector contains NaN or Inf")
    return CoherencyMatrix(
        t11=float(v[0]),
        t22=float(v[1]),
        t33=float(v[2]),
        t12=complex(v[3], v[4]),
        t13=complex(v[5], v[6]),
        t23=complex(v[7], v[8]),
    )


def vectors_to_matrices(values: np.ndarray) -> np.ndarray:
    """Batched version of :func:`vector_to_matrix` returning complex arrays.

    Parameters
    ----------
    values : np.ndarray
        Real array of shape ``(..., 9)`` in component order.

    Returns
    -------
    np.ndarray
        Complex array of shape ``(..., 3, 3)``; Hermitian by construction.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != NUM_COMPONENTS:
        raise ShapeMismatchError(
            f"expected last axis of size {NUM_COMPONENTS}, got shape {values.shape}"
        )
    out = np.empty(values.shape[:-1] + (3, 3), dtype=np.complex128)
    out[..., 0, 0] = values[..., 0]
    out[..., 1, 1] = values[..., 1]
    out[..., 2, 2] = values[..., 2]
    out[..., 0, 1] = values[..., 3] + 1j * values[..., 4]
    out[..., 0, 2] = values[..., 5] + 1j * values[..., 6]
    out[..., 1, 2] = values[..., 7] + 1j * values[..., 8]
    out[..., 1, 0] = np.conj(out[..., 0, 1])
    out[..., 2, 0] = np.conj(out[..., 0, 2])
    out[..., 2, 1] = np.conj(out[..., 1, 2])
    return out


def matrices_to_vectors(matrices: np.ndarray) -> np.ndarray:
    """Batched inverse of :func:`vectors_to_matrices` (upper triangle only)."""
    matrices = np.asarray(matrices)
    if matrices.shape[-2:] != (3, 3):
        raise ShapeMismatchError(f"expected trailing 3x3 axes, got shape {matrices.shape}")
    out = np.empty(matrices.shape[:-2] + (NUM_COMPONENTS,), dtype=np.float64)
    out[..., 0] = matrices[..., 0, 0].real
    out[..., 1] = matrices[..., 1, 1].real
    out[..., 2] = matrices[..., 2, 2].real
    out[..., 3] = matrices[..., 0, 1].real
    out[..., 4] = matrices[..., 0, 1].imag
    out[..., 5] = matrices[..., 0, 2].real
    out[..., 6] = matrices[..., 0, 2].imag
    out[..., 7] = matrices[..., 1, 2].real
    out[..., 8] = matrices[..., 1, 2].imag
    return out


@dataclass(frozen=True, eq=False)
class Patch:
    """A fully populated window of pixel vectors with a class label.

    ``pixels`` has shape ``(m1, m2, 9)``.  ``origin`` is the (row, col) of
    the patch center in the source scene, or ``(-1, -1)`` for synthetic
    patches with no scene context.
    """

    pixels: np.ndarray
    label: int
    origin: tuple[int, int] = (-1, -1)

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[-1] != NUM_COMPONENTS:
            raise ShapeMismatchError(
                f"patch pixels must have shape (m1, m2, {NUM_COMPONENTS}), "
                f"got {self.pixels.shape}"
            )
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ShapeMismatchError("patch must contain at least one pixel")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[0], self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class SceneDataset:
    """Full raster of coherency data with a ground-truth label map.

    ``data`` has shape ``(rows, cols, 9)`` in component order; ``labels`` has
    shape ``(rows, cols)`` with :data:`UNLABELED` marking unknown pixels.
    Arrays are frozen (made read-only) on construction, so views handed out
    to patches cannot mutate the scene.
    """

    data: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[-1] != NUM_COMPONENTS:
            raise ShapeMismatchError(
                f"scene data must have shape (rows, cols, {NUM_COMPONENTS}), "
                f"got {self.data.shape}"
            )
        if self.labels.shape != self.data.shape[:2]:
            raise ShapeMismatchError(
                f"label grid {self.labels.shape} does not match "
                f"data grid {self.data.shape[:2]}"
            )
        valid = self.labels[self.labels != UNLABELED]
        if valid.size and (valid.min() < 0 or valid.max() >= len(self.class_names)):
            raise ValueError(
                f"labels must lie in [0, {len(self.class_names)}) or be {UNLABELED}"
            )
        self.data.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        """Labeled-pixel count per class."""
        valid = self.labels[self.labels != UNLABELED]
        return np.bincount(valid, minlength=self.num_classes)
