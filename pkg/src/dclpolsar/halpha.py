"""Entropy / mean-alpha target decomposition of coherency matrices.

Each pixel's coherency matrix T is diagonalized; the eigenvalue spectrum
gives pseudo-probabilities ``p_i = lambda_i / sum(lambda_j)`` and the
scattering entropy ``H = -sum p_i log3 p_i``, while the eigenvectors give
per-mechanism alpha angles ``alpha_i = arccos(|e_i1|)`` whose
probability-weighted mean is the dominant scattering angle.  H near 0 with
a low mean alpha indicates a clean surface scatterer; H near 1 indicates a
mix of comparable mechanisms.

Scalar functions operate on one pixel and are composed by
:func:`halpha_of_pixel`; :func:`decompose_field` is the batched equivalent
for whole rasters.  Both paths compute the same quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherency import (
    NUM_COMPONENTS,
    CoherencyMatrix,
    vector_to_matrix,
    vectors_to_matrices,
)
from .errors import NonFiniteError, ShapeMismatchError

#: Natural log of 3; entropy uses log base 3 so three equal eigenvalues give 1.
_LOG3 = float(np.log(3.0))

#: Power floor used when a pixel has no surrounding scene to set the scale.
ABSOLUTE_POWER_FLOOR = 1e-300

#: Fraction of the scene mean trace below which a pixel counts as no-return.
RELATIVE_POWER_FLOOR = 1e-12

#: Tolerance below which a should-be-zero eigenvector component is skipped
#: when picking the phase anchor.
_PHASE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues and eigenvectors of one coherency matrix.

    ``lambdas`` holds the three real eigenvalues sorted descending and
    clamped to be non-negative; column ``i`` of ``eigvecs`` is the unit
    eigenvector paired with ``lambdas[i]``, with its phase normalized so
    the first component of significant magnitude is real non-negative.
    """

    lambdas: np.ndarray
    eigvecs: np.ndarray

    def __post_init__(self):
        if self.lambdas.shape != (3,) or self.eigvecs.shape != (3, 3):
            raise ShapeMismatchError(
                f"expected shapes (3,) and (3, 3), got "
                f"{self.lambdas.shape} and {self.eigvecs.shape}"
            )

    def reconstruct(self) -> np.ndarray:
        """Sum of lambda_i e_i e_i^H; equals the source matrix up to rounding."""
        return (self.eigvecs * self.lambdas) @ np.conj(self.eigvecs.T)


@dataclass(frozen=True, eq=False)
class HAlpha:
    """Decomposition products for one pixel.

    ``p`` are the three pseudo-probabilities, ``entropy`` is in [0, 1],
    ``alphas`` and ``alpha_bar`` are in degrees within [0, 90].  ``valid``
    is False for no-return pixels (total power under the floor), which carry
    ``entropy = 0`` and ``alpha_bar = 0``.
    """

    p: np.ndarray
    entropy: float
    alphas: np.ndarray
    alpha_bar: float
    valid: bool


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column's phase so its anchor component is real >= 0.

    The anchor is the first component with magnitude above ``_PHASE_EPS``
    (columns are unit norm, so one always exists).
    """
    out = vectors.copy()
    for i in range(3):
        col = out[:, i]
        significant = np.flatnonzero(np.abs(col) > _PHASE_EPS)
        anchor = col[significant[0]]
        out[:, i] = col * np.conj(anchor / abs(anchor))
    return out


def eigendecompose(t: CoherencyMatrix) -> EigenSystem:
    """Diagonalize a coherency matrix.

    Parameters
    ----------
    t : CoherencyMatrix
        Hermitian PSD matrix; small negative eigenvalues from rounding are
        clamped to zero (grossly indefinite input should be rejected at
        ingestion, not here).

    Returns
    -------
    EigenSystem
        Eigenvalues descending, phase-canonical unit eigenvectors.

    Raises
    ------
    NonFiniteError
        If any entry of ``t`` is NaN or infinite.
    """
    m = t.to_matrix()
    if not np.all(np.isfinite(m.view(np.float64))):
        raise NonFiniteError("coherency matrix contains NaN or Inf")
    lam, vec = np.linalg.eigh(m)
    lam = np.maximum(lam[::-1], 0.0)
    vec = _canonical_phase(np.ascontiguousarray(vec[:, ::-1]))
    return EigenSystem(lambdas=lam, eigvecs=vec)


def pseudo_probabilities(
    lambdas: np.ndarray, power_floor: float = ABSOLUTE_POWER_FLOOR
) -> np.ndarray:
    """Normalize eigenvalues to pseudo-probabilities p_i = lambda_i / sum.

    Returns (0, 0, 0) when the total power falls below ``power_floor``;
    callers treat that as a no-return pixel.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    total = float(lam.sum())
    if total < power_floor:
        return np.zeros(3)
    return lam / total


def entropy(p: np.ndarray) -> float:
    """Scattering entropy -sum p_i log3 p_i, with 0 log 0 = 0, clamped to [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    terms = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    # + 0.0 turns the -0.0 that -sum(...) yields for one-hot p into 0.0
    return float(np.clip(-terms.sum() / _LOG3, 0.0, 1.0) + 0.0)


def alpha_angles(es: EigenSystem) -> np.ndarray:
    """Per-mechanism scattering angles arccos(|e_i1|) in degrees, in [0, 90]."""
    first = np.abs(es.eigvecs[0, :])
    return np.degrees(np.arccos(np.clip(first, 0.0, 1.0)))


def mean_alpha(p: np.ndarray, alphas: np.ndarray) -> float:
    """Probability-weighted mean of the alpha angles, in degrees."""
    return float(np.dot(np.asarray(p, dtype=np.float64), np.asarray(alphas, dtype=np.float64)))


def halpha_of_pixel(v: np.ndarray, power_floor: float = ABSOLUTE_POWER_FLOOR) -> HAlpha:
    """Full decomposition of one 9-component pixel vector.

    Composes vector-to-matrix conversion, eigendecomposition, and the
    entropy / alpha computations.  A pixel whose total power is below
    ``power_floor`` comes back with ``valid=False``, zero entropy, and zero
    mean alpha.
    """
    es = eigendecompose(vector_to_matrix(v))
    p = pseudo_probabilities(es.lambdas, power_floor=power_floor)
    valid = bool(p.sum() > 0.0)
    alphas = alpha_angles(es)
    if not valid:
        return HAlpha(p=p, entropy=0.0, alphas=alphas, alpha_bar=0.0, valid=False)
    return HAlpha(
        p=p,
        entropy=entropy(p),
        alphas=alphas,
        alpha_bar=mean_alpha(p, alphas),
        valid=True,
    )


def resolve_power_floor(values: np.ndarray, power_floor: float | None) -> float:
    """Pick the no-return threshold for a field of pixel vectors.

    ``None`` means relative mode: ``RELATIVE_POWER_FLOOR`` times the field's
    mean total power, never below ``ABSOLUTE_POWER_FLOOR``.
    """
    if power_floor is not None:
        return float(power_floor)
    mean_trace = float(values[..., :3].sum(axis=-1).mean()) if values.size else 0.0
    return max(RELATIVE_POWER_FLOOR * mean_trace, ABSOLUTE_POWER_FLOOR)


def decompose_field(
    values: np.ndarray,
    power_floor: float | None = None,
    chunk: int = 65536,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched decomposition of an array of pixel vectors.

    Parameters
    ----------
    values : np.ndarray
        Real array of shape ``(..., 9)`` in component order.
    power_floor : float or None
        Absolute no-return threshold; ``None`` selects the relative floor
        (see :func:`resolve_power_floor`).
    chunk : int
        Pixels decomposed per slice, bounding the complex workspace.

    Returns
    -------
    (entropy, alpha_bar, valid)
        Three arrays of shape ``values.shape[:-1]``: entropy in [0, 1],
        mean alpha in degrees, and the validity mask.  Matches the scalar
        path pixel for pixel.

    Raises
    ------
    NonFiniteError
        If any component is NaN or infinite.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != NUM_COMPONENTS:
        raise ShapeMismatchError(
            f"expected last axis of size {NUM_COMPONENTS}, got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("pixel field contains NaN or Inf")

    floor = resolve_power_floor(values, power_floor)
    grid_shape = values.shape[:-1]
    flat = values.reshape(-1, NUM_COMPONENTS)
    n = flat.shape[0]

    h = np.zeros(n)
    abar = np.zeros(n)
    valid = np.zeros(n, dtype=bool)

    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        lam, vec = np.linalg.eigh(vectors_to_matrices(flat[start:stop]))
        lam = np.maximum(lam[:, ::-1], 0.0)
        total = lam.sum(axis=1)
        ok = total >= floor
        ok &= total > 0.0

        p = np.zeros_like(lam)
        np.divide(lam, total[:, None], out=p, where=ok[:, None])
        terms = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
        h[start:stop] = np.clip(-terms.sum(axis=1) / _LOG3, 0.0, 1.0) + 0.0

        # alpha_i needs only the magnitude of each eigenvector's first
        # component, so the phase convention drops out.
        first = np.abs(vec[:, 0, ::-1])
        alphas = np.degrees(np.arccos(np.clip(first, 0.0, 1.0)))
        abar[start:stop] = (p * alphas).sum(axis=1)
        valid[start:stop] = ok

    return h.reshape(grid_shape), abar.reshape(grid_shape), valid.reshape(grid_shape)
