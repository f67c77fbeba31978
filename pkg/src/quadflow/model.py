"""Loss, gradient, predictor and overlap primitives for quadratic-activation
teacher-student networks.

A network with ``m`` neurons and quadratic activations computes
``u(x) = (1/m) sum_j (w_j . x)^2 = Tr(x x^T W W^T)`` where ``W`` stacks the
columns ``w_j / sqrt(m)``.  Only the Gram matrix ``Z = W W^T`` matters for
predictions, so everything downstream is phrased in terms of ``Z`` and the
teacher Gram matrix ``Z*``.

Under standard Gaussian inputs the expected quadratic cost reduces to the
closed form

    L(W) = 1/2 ||Z - Z*||_F^2 + 1/4 [Tr(Z - Z*)]^2 ,

whose gradient in ``W`` is ``2 (Z - Z*) W + Tr(Z - Z*) W``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WeightMatrix",
    "GramState",
    "predict",
    "population_loss",
    "loss_gradient",
    "overlap",
]

# Eigenvalues of a Gram matrix may dip slightly below zero through round-off;
# anything in [-PSD_TOL, 0) is clamped to 0, anything below is an error.
PSD_TOL = 1e-10
SYMMETRY_RTOL = 1e-12
RECONSTRUCTION_RTOL = 1e-8


@dataclass(frozen=True)
class WeightMatrix:
    """Normalized d x m weight matrix (columns are w_j / sqrt(m)).

    ``entries`` stores the already-normalized matrix; use
    :meth:`from_vectors` to apply the 1/sqrt(m) convention to raw neuron
    vectors.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ValueError(f"weight matrix must be 2-d with d, m >= 1, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("weight matrix has non-finite entries")
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def from_vectors(cls, vectors) -> "WeightMatrix":
        """Build from raw neuron columns, applying the 1/sqrt(m) normalization."""
        vectors = np.asarray(vectors, dtype=float)
        return cls(vectors / np.sqrt(vectors.shape[1]))

    def gram(self) -> np.ndarray:
        return self.entries @ self.entries.T


@dataclass(frozen=True)
class GramState:
    """Symmetric PSD matrix ``Z = W W^T`` with cached eigendecomposition.

    Eigenvalues are sorted descending; eigenvectors are the matching columns
    of ``eigenvectors``.  Construction validates symmetry, positivity up to
    round-off and the accuracy of the decomposition.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, matrix) -> "GramState":
        Z = np.asarray(matrix, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise ValueError(f"Gram matrix must be square, got shape {Z.shape}")
        scale = np.linalg.norm(Z)
        if scale > 0 and np.linalg.norm(Z - Z.T) > SYMMETRY_RTOL * scale * Z.shape[0]:
            raise ValueError("matrix is not symmetric within tolerance")
        Z = 0.5 * (Z + Z.T)
        vals, vecs = np.linalg.eigh(Z)
        if vals.size and vals[0] < -PSD_TOL * max(1.0, scale):
            raise ValueError(f"matrix is not PSD: smallest eigenvalue {vals[0]:.3e}")
        vals = np.where((vals < 0) & (vals >= -PSD_TOL * max(1.0, scale)), 0.0, vals)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        recon = (vecs * vals) @ vecs.T
        if scale > 0 and np.linalg.norm(recon - Z) > RECONSTRUCTION_RTOL * scale:
            raise ValueError("eigendecomposition failed to reconstruct the matrix")
        return cls(Z, vals, vecs)

    @classmethod
    def from_weights(cls, W: WeightMatrix) -> "GramState":
        return cls.from_matrix(W.entries @ W.entries.T)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def rank(self, tol: float = 1e-12) -> int:
        top = self.eigenvalues[0] if self.eigenvalues.size else 0.0
        return int(np.sum(self.eigenvalues > tol * max(1.0, top)))


def _check_x(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != d:
        raise ValueError(f"input has dimension {x.shape[0]}, expected {d}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input has non-finite entries")
    return x


def predict(W: WeightMatrix, x) -> float:
    """Network output ``Tr(x x^T W W^T) = ||W^T x||^2`` at a single input."""
    x = _check_x(x, W.d)
    y = W.entries.T @ x
    return float(y @ y)


def _delta(W: WeightMatrix, Zstar: GramState) -> np.ndarray:
    if W.d != Zstar.d:
        raise ValueError(f"weight matrix has d={W.d}, Gram target has d={Zstar.d}")
    return W.gram() - Zstar.matrix


def population_loss(W: WeightMatrix, Zstar: GramState) -> float:
    """Expected quadratic cost over standard Gaussian inputs.

    Equals ``1/2 ||D||_F^2 + 1/4 [Tr D]^2`` with ``D = W W^T - Z*``; zero
    exactly when the student Gram matrix matches the target.
    """
    D = _delta(W, Zstar)
    return float(0.5 * np.sum(D * D) + 0.25 * np.trace(D) ** 2)


def loss_gradient(W: WeightMatrix, Zstar: GramState) -> np.ndarray:
    """Gradient of :func:`population_loss` in ``W``: ``2 D W + Tr(D) W``."""
    D = _delta(W, Zstar)
    return 2.0 * (D @ W.entries) + np.trace(D) * W.entries


def overlap(Z: GramState | np.ndarray, Zstar: GramState | np.ndarray) -> float:
    """Normalized trace inner product ``|Tr(Z Z*)| / (||Z||_F ||Z*||_F)``.

    Lies in [0, 1] for PSD arguments, with equality to 1 iff the matrices are
    proportional.  Raises ``ValueError`` when either argument vanishes.
    """
    A = Z.matrix if isinstance(Z, GramState) else np.asarray(Z, dtype=float)
    B = Zstar.matrix if isinstance(Zstar, GramState) else np.asarray(Zstar, dtype=float)
    na, nb = np.linalg.norm(A), np.linalg.norm(B)
    if na == 0.0 or nb == 0.0:
        raise ValueError("overlap is undefined for a zero matrix")
    value = abs(float(np.sum(A * B))) / (na * nb)
    # Guard against round-off pushing the ratio just past 1.
    return min(value, 1.0)
