"""Closed-form predictions: flow limits, convergence-rate regimes, and
overlap bounds.

For a teacher Gram matrix with eigenpairs (mu_k, v_k) the gradient flow from
a generic initialization converges to

  * Z* itself when m >= m*,
  * the truncated, uniformly inflated matrix
    ``sum_{k<=m} (mu_k + tau) v_k v_k^T`` with
    ``tau = (1/(m+2)) sum_{k>m} mu_k`` when m < m* and the spectrum is
    simple.

In the overparameterized regime the loss decays at an explicit rate set by
the smallest nonzero teacher eigenvalue mu: exp(-8 mu t) when m, m* >= d,
exp(-4 mu t) when m = m* < d, and 1/t^2 when m, d > m*.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import GramState

__all__ = [
    "SpectrumSpec",
    "RateRegime",
    "RateClass",
    "fixed_point_gram",
    "classify_rate",
    "random_overlap_limit",
    "max_overlap",
    "fit_exponential_rate",
    "poly_rate_spread",
]

SIMPLE_GAP = 1e-8


@dataclass(frozen=True)
class SpectrumSpec:
    """Nonzero teacher spectrum: descending eigenvalues with orthonormal
    eigenvectors (columns of ``eigenvectors``, one per eigenvalue)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        vecs = np.asarray(self.eigenvectors, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("eigenvalues must be a non-empty 1-d array")
        if np.any(vals <= 0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(vals) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if vecs.ndim != 2 or vecs.shape[1] != vals.size:
            raise ValueError("need one eigenvector column per eigenvalue")
        if np.linalg.norm(vecs.T @ vecs - np.eye(vals.size)) > 1e-10:
            raise ValueError("eigenvectors are not orthonormal")
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def mstar(self) -> int:
        return self.eigenvalues.size

    @property
    def d(self) -> int:
        return self.eigenvectors.shape[0]

    @classmethod
    def from_gram(cls, Zstar: GramState, tol: float = 1e-12) -> "SpectrumSpec":
        mask = Zstar.eigenvalues > tol * max(1.0, Zstar.eigenvalues[0])
        return cls(Zstar.eigenvalues[mask], Zstar.eigenvectors[:, mask])

    def gram(self) -> GramState:
        Z = (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T
        return GramState.from_matrix(Z)


class RateRegime(enum.Enum):
    EXP_8MU = "exp(-8 mu t)"      # m, m* >= d
    EXP_4MU = "exp(-4 mu t)"      # m = m* < d
    POLY_INV_T2 = "1/t^2"         # m, d > m*


@dataclass(frozen=True)
class RateClass:
    regime: RateRegime
    mu: float

    @property
    def exponent(self) -> float:
        """Decay exponent of the loss: the slope of log L(t) when the decay
        is exponential, the power of t when polynomial."""
        if self.regime is RateRegime.EXP_8MU:
            return -8.0 * self.mu
        if self.regime is RateRegime.EXP_4MU:
            return -4.0 * self.mu
        return -2.0


def fixed_point_gram(spec: SpectrumSpec, m: int) -> GramState:
    """Predicted limit of the student Gram matrix for an m-neuron student.

    For m >= m* this is the teacher matrix.  For m < m* (simple spectrum
    required) the limit keeps the top m eigendirections with every retained
    eigenvalue shifted up by ``tau = (sum of dropped eigenvalues)/(m+2)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    vals, vecs = spec.eigenvalues, spec.eigenvectors
    if m >= spec.mstar:
        return spec.gram()
    gaps = -np.diff(vals)
    if np.any(gaps < SIMPLE_GAP):
        raise ValueError(
            "underparameterized limit requires a simple spectrum "
            f"(minimal gap {gaps.min():.3e} < {SIMPLE_GAP:.0e}); the minimizer "
            "family is not unique under repeated eigenvalues")
    tau = float(np.sum(vals[m:])) / (m + 2)
    Z = (vecs[:, :m] * (vals[:m] + tau)) @ vecs[:, :m].T
    return GramState.from_matrix(Z)


def classify_rate(m: int, mstar: int, d: int, spec: SpectrumSpec) -> RateClass:
    """Asymptotic loss-decay regime for an overparameterized student.

    Requires ``m >= min(m*, d)``; mu is the smallest nonzero teacher
    eigenvalue.
    """
    if mstar != spec.mstar:
        raise ValueError(f"mstar={mstar} disagrees with the spectrum ({spec.mstar})")
    if m < min(mstar, d):
        raise ValueError(
            f"rate classification needs m >= min(m*, d); got m={m}, m*={mstar}, d={d}")
    mu = float(spec.eigenvalues[-1])
    if m >= d and mstar >= d:
        return RateClass(RateRegime.EXP_8MU, mu)
    if m == mstar:
        return RateClass(RateRegime.EXP_4MU, mu)
    return RateClass(RateRegime.POLY_INV_T2, mu)


def random_overlap_limit(alpha: float, alphastar: float) -> float:
    """Limiting overlap between independent uniform projectors of relative
    ranks alpha and alpha*: sqrt(alpha * alpha*)."""
    if not (0 < alpha <= 1 and 0 < alphastar <= 1):
        raise ValueError("alpha and alpha* must lie in (0, 1]")
    return float(np.sqrt(alpha * alphastar))


def max_overlap(m: int, mstar: int) -> float:
    """Largest overlap a rank-<=m PSD matrix can reach with a rank-m*
    orthogonal projector: min(sqrt(m/m*), 1)."""
    if m < 1 or mstar < 1:
        raise ValueError("m and m* must be >= 1")
    return float(min(np.sqrt(m / mstar), 1.0))


def _final_decade(times: np.ndarray, mask: np.ndarray) -> np.ndarray:
    t_end = times[mask][-1]
    return mask & (times >= t_end / 10.0) & (times > 0)


def fit_exponential_rate(times, losses, floor: float = 1e-24) -> float:
    """Least-squares slope of log(loss) over the final decade of times before
    the numerical floor.  Returns the slope (per unit time, negative for a
    decaying loss)."""
    times = np.asarray(times, dtype=float)
    losses = np.asarray(losses, dtype=float)
    mask = losses > floor
    if np.count_nonzero(mask) < 2:
        raise ValueError("not enough samples above the floor to fit a rate")
    window = _final_decade(times, mask)
    t, y = times[window], np.log(losses[window])
    slope = np.polyfit(t, y, 1)[0]
    return float(slope)


def poly_rate_spread(times, losses, floor: float = 1e-24) -> float:
    """Max/min ratio of t^2 * loss over the final decade of recorded times.

    A ratio close to 1 certifies the 1/t^2 regime (the renormalized loss
    stays bounded); values blowing up indicate a different decay law.
    """
    times = np.asarray(times, dtype=float)
    losses = np.asarray(losses, dtype=float)
    mask = (losses > floor) & (times > 0)
    if np.count_nonzero(mask) < 2:
        raise ValueError("not enough samples above the floor")
    window = _final_decade(times, mask)
    r = times[window] ** 2 * losses[window]
    return float(r.max() / r.min())
