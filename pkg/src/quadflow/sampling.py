"""Random teachers and student initializations.

Provides uniform sampling on the Stiefel manifold (orthonormal frames),
Gaussian weight matrices with the N(0, I_d/d) column convention, and the
projection-product matrix ``Y = U0^T U* U*^T U0`` whose spectrum feeds the
high-dimensional analysis.

All sampling goes through ``numpy.random.Generator`` (PCG64).  Passing the
same 64-bit seed reproduces bit-identical streams, which the experiment
runner relies on for byte-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import WeightMatrix

__all__ = [
    "as_generator",
    "OrthonormalFrame",
    "sample_stiefel",
    "sample_gaussian_weights",
    "build_projection_product",
    "orthonormal_weights",
]

FRAME_TOL = 1e-10
# Floor for eigenvalues of V^T V when forming the inverse square root; draws
# this degenerate are resampled.
GRAM_FLOOR = 1e-12


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or a 64-bit seed and return a Generator (PCG64)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class OrthonormalFrame:
    """d x k matrix with orthonormal columns (``U^T U = I_k``)."""

    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2:
            raise ValueError("frame must be a 2-d array")
        k = U.shape[1]
        err = np.linalg.norm(U.T @ U - np.eye(k))
        if err > FRAME_TOL:
            raise ValueError(f"columns are not orthonormal: ||U^T U - I|| = {err:.3e}")
        object.__setattr__(self, "U", U)

    @property
    def d(self) -> int:
        return self.U.shape[0]

    @property
    def k(self) -> int:
        return self.U.shape[1]


def sample_stiefel(d: int, k: int, rng) -> OrthonormalFrame:
    """Uniform orthonormal frame via ``U = V (V^T V)^{-1/2}`` with Gaussian V.

    The inverse square root is taken through the eigendecomposition of
    ``V^T V``; a draw with an eigenvalue below the floor (probability zero)
    is discarded and the next draw from the stream is used.
    """
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = as_generator(rng)
    while True:
        V = rng.standard_normal((d, k))
        G = V.T @ V
        vals, vecs = np.linalg.eigh(G)
        if vals[0] > GRAM_FLOOR:
            break
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.T
    return OrthonormalFrame(V @ inv_sqrt)


def sample_gaussian_weights(d: int, m: int, rng) -> WeightMatrix:
    """Weight matrix with neuron vectors i.i.d. N(0, I_d/d).

    After the 1/sqrt(m) column normalization the entries are N(0, 1/(d m)),
    so Tr(W W^T) concentrates around 1.
    """
    if d < 1 or m < 1:
        raise ValueError(f"need d, m >= 1, got d={d}, m={m}")
    rng = as_generator(rng)
    vectors = rng.standard_normal((d, m)) / np.sqrt(d)
    return WeightMatrix.from_vectors(vectors)


def orthonormal_weights(d: int, m: int, rng) -> WeightMatrix:
    """Weight matrix ``U / sqrt(m)`` with U uniform on the Stiefel manifold.

    This is the orthonormal-family initialization; the resulting Gram matrix
    is a projector scaled by 1/m, so its trace is exactly 1.
    """
    frame = sample_stiefel(d, m, rng)
    return WeightMatrix.from_vectors(frame.U)


def build_projection_product(U0: OrthonormalFrame, Ustar: OrthonormalFrame) -> np.ndarray:
    """Product matrix ``Y = U0^T U* U*^T U0`` (symmetric, spectrum in [0, 1]).

    ``Y`` is the compression of the projector onto span(U*) to the frame U0;
    its eigenvalue distribution converges to the MANOVA law as the dimensions
    grow proportionally.
    """
    if U0.d != Ustar.d:
        raise ValueError(f"frames live in different dimensions: {U0.d} vs {Ustar.d}")
    C = U0.U.T @ Ustar.U
    Y = C @ C.T
    return 0.5 * (Y + Y.T)
