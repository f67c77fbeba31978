"""Infinite-dimensional objects: the MANOVA spectral law, its log transform
Theta, the self-consistent rescaled-time curve phi(gamma), and the limiting
overlap curve chi(gamma).

The spectral measure for relative ranks (alpha, alpha*) has atoms at 0 and 1
and the bulk density

    w(x) = sqrt((r+ - x)(x - r-)) / (2 pi alpha x (1 - x)),   x in [r-, r+],
    r+- = (sqrt(alpha (1-alpha*)) +- sqrt(alpha* (1-alpha)))^2.

Bulk integrals use the substitution ``x = r- + (r+ - r-) sin^2(theta)``
(midpoint rule in theta), which absorbs the square-root edge singularities
and, when r- = 0, cancels the 1/x factor analytically.

phi is obtained from the coupled system on (F, J):

    dF/dgamma = 4 F / D,   dJ/dgamma = 4 (e^{4 gamma/alpha*} - J) / D,
    D = alpha + Gam(J) (e^{4 gamma/alpha*} - J),
    Gam(J) = (alpha + alpha* - 1)^+ / J + Theta'(J - 1),

with F(0) = J(0) = 1, and then ``phi = -1/2 log(alpha F' / 4)``.  The solver
tracks log F and log G = log(JF), so the exponentially growing factors never
overflow; every recorded sample is checked against the integrated identity

    4 gamma = alpha log F + (alpha+alpha*-1)^+ log J + Theta(J - 1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SpectralDensity",
    "HighDimCurve",
    "HighDimSolverError",
    "HistogramReport",
    "manova_density",
    "theta",
    "theta_prime",
    "solve_phi",
    "overlap_limit_curve",
    "overlap_gap_curve",
    "density_histogram_compare",
    "sample_bulk",
]

DEFAULT_NODES = 90_000


class HighDimSolverError(RuntimeError):
    """The self-consistent solve left its proven domain or lost accuracy."""


@dataclass(frozen=True)
class SpectralDensity:
    """MANOVA / Jacobi-type limit law for products of two random projectors.

    ``bulk_nodes``/``bulk_weights`` hold a quadrature rule for the continuous
    part: ``integral f dmu = atom0 f(0) + atom1 f(1) + sum_i w_i f(x_i)``.
    """

    alpha: float
    alphastar: float
    r_minus: float
    r_plus: float
    atom0: float
    atom1: float
    bulk_nodes: np.ndarray
    bulk_weights: np.ndarray

    @property
    def bulk_mass(self) -> float:
        return float(np.sum(self.bulk_weights))

    @property
    def is_arcsine(self) -> bool:
        """True for alpha = alpha* = 1/2, where the bulk is the arcsine law
        on [0, 1] and resolvent integrals have closed forms."""
        return abs(self.alpha - 0.5) < 1e-12 and abs(self.alphastar - 0.5) < 1e-12

    def integrate(self, f) -> float:
        """Integrate a scalar function against the full measure."""
        total = self.atom0 * f(0.0) + self.atom1 * f(1.0)
        if self.bulk_nodes.size:
            total += float(np.sum(self.bulk_weights * f(self.bulk_nodes)))
        return total

    def mean(self) -> float:
        return self.atom1 + float(np.sum(self.bulk_weights * self.bulk_nodes))

    def total_mass(self) -> float:
        return self.atom0 + self.atom1 + self.bulk_mass

    def pdf(self, x) -> np.ndarray:
        """Bulk density w(x) (atoms excluded), zero outside [r-, r+]."""
        x = np.asarray(x, dtype=float)
        inside = (x > self.r_minus) & (x < self.r_plus) & (x > 0) & (x < 1)
        out = np.zeros_like(x)
        xi = x[inside]
        out[inside] = np.sqrt((self.r_plus - xi) * (xi - self.r_minus)) / (
            2.0 * np.pi * self.alpha * xi * (1.0 - xi))
        return out

    def to_csv(self, csv_path, json_path=None) -> None:
        """Write the bulk as `x,w` rows plus a JSON header with atoms/edges."""
        import json

        with open(csv_path, "w", newline="") as fh:
            fh.write("x,w\n")
            xs = self.bulk_nodes
            for x, w in zip(xs, self.pdf(xs)):
                fh.write(f"{x:.17g},{w:.17g}\n")
        if json_path is not None:
            header = {
                "alpha": self.alpha, "alphastar": self.alphastar,
                "r_minus": self.r_minus, "r_plus": self.r_plus,
                "atom0": self.atom0, "atom1": self.atom1,
            }
            with open(json_path, "w") as fh:
                json.dump(header, fh, indent=2, sort_keys=True)
                fh.write("\n")


def manova_density(alpha: float, alphastar: float,
                   n_nodes: int = DEFAULT_NODES) -> SpectralDensity:
    """Construct the limiting spectral law for ranks (alpha, alpha*).

    The node count doubles when r- = 0 (alpha = alpha*), the slowest
    converging case for the quadrature.
    """
    if not (0 < alpha <= 1 and 0 < alphastar <= 1):
        raise ValueError("alpha and alpha* must lie in (0, 1]")
    sq1 = np.sqrt(alpha * (1.0 - alphastar))
    sq2 = np.sqrt(alphastar * (1.0 - alpha))
    r_minus = (sq1 - sq2) ** 2
    r_plus = (sq1 + sq2) ** 2
    atom0 = max(1.0 - alphastar / alpha, 0.0)
    atom1 = max(alpha + alphastar - 1.0, 0.0) / alpha

    width = r_plus - r_minus
    if width <= 0:
        nodes = np.empty(0)
        weights = np.empty(0)
    else:
        n = 2 * n_nodes if r_minus < 1e-14 else n_nodes
        dtheta = (np.pi / 2.0) / n
        th = (np.arange(n) + 0.5) * dtheta
        s2 = np.sin(th) ** 2
        x = r_minus + width * s2
        # sqrt((r+ - x)(x - r-)) = width * sin(theta) cos(theta)
        sc = np.sin(th) * np.cos(th)
        weights = dtheta * (width * sc) ** 2 / (np.pi * alpha * x * (1.0 - x))
        nodes = x
    return SpectralDensity(alpha=float(alpha), alphastar=float(alphastar),
                           r_minus=float(r_minus), r_plus=float(r_plus),
                           atom0=float(atom0), atom1=float(atom1),
                           bulk_nodes=nodes, bulk_weights=weights)


def theta(u: float, density: SpectralDensity) -> float:
    """Log transform of the bulk:
    Theta(u) = (1/2 pi) int sqrt((r+ - x)(x - r-)) / (x(1-x)) log(1+ux) dx."""
    if u <= -1:
        raise ValueError("theta is defined for u > -1")
    w, x = density.bulk_weights, density.bulk_nodes
    if not x.size:
        return 0.0
    return float(density.alpha * np.sum(w * np.log1p(u * x)))


def theta_prime(u: float, density: SpectralDensity) -> float:
    """Derivative of :func:`theta` (differentiation under the integral)."""
    if u <= -1:
        raise ValueError("theta' is defined for u > -1")
    w, x = density.bulk_weights, density.bulk_nodes
    if not x.size:
        return 0.0
    return float(density.alpha * np.sum(w * x / (1.0 + u * x)))


@dataclass(frozen=True)
class HighDimCurve:
    """Sampled solution of the rescaled-time self-consistent system.

    ``log_F``/``log_G`` are exact working variables; ``F``, ``G`` and
    ``J = G/F`` are exposed as properties (they overflow only for
    gamma/alpha* beyond ~44, far outside the solved ranges).  ``chi`` is
    filled by :func:`overlap_limit_curve`.
    """

    gammas: np.ndarray
    log_F: np.ndarray
    log_G: np.ndarray
    phi: np.ndarray
    residuals: np.ndarray
    alpha: float
    alphastar: float
    chi: np.ndarray | None = None

    @property
    def F(self) -> np.ndarray:
        return np.exp(self.log_F)

    @property
    def G(self) -> np.ndarray:
        return np.exp(self.log_G)

    @property
    def J(self) -> np.ndarray:
        return np.exp(self.log_G - self.log_F)

    def to_csv(self, path) -> None:
        chi = self.chi if self.chi is not None else np.full_like(self.gammas, np.nan)
        with open(path, "w", newline="") as fh:
            fh.write("gamma,F,G,J,phi,chi,residual\n")
            for row in zip(self.gammas, self.F, self.G, self.J,
                           self.phi, chi, self.residuals):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _q_transform(density: SpectralDensity, jinv: float) -> float:
    """Q(1/J) = J Theta'(J-1)/alpha = int_bulk x / (jinv + (1-jinv) x) dmu."""
    x, w = density.bulk_nodes, density.bulk_weights
    if not x.size:
        return 0.0
    return float(np.sum(w * x / (jinv + (1.0 - jinv) * x)))


def _derivatives(density: SpectralDensity, cplus: float, gamma: float,
                 a: float, b: float):
    """d(log F)/dgamma and d(log G)/dgamma in overflow-safe variables.

    With delta = log J - 4 gamma / alpha* (always <= 0) and GJ = J * Gam(J):
        d log F = 4 / (alpha + GJ (e^{-delta} - 1)),
        d log G = 4 / (alpha e^{delta} + GJ (1 - e^{delta})).
    """
    alpha = density.alpha
    jinv = np.exp(a - b)
    delta = (b - a) - 4.0 * gamma / density.alphastar
    gj = cplus + alpha * _q_transform(density, jinv)
    den_a = alpha + gj * np.expm1(-delta)
    if not np.isfinite(den_a) or den_a <= 0:
        raise HighDimSolverError(
            f"ODE denominator {den_a!r} <= 0 at gamma={gamma:.6g} "
            "(left the proven domain)")
    da = 4.0 / den_a
    db = 4.0 / (alpha * np.exp(delta) - gj * np.expm1(delta))
    return da, db


def solve_phi(alpha: float, alphastar: float, gamma_max: float,
              step: float = 2e-5, method: str = "euler",
              record_every: int | None = None,
              density: SpectralDensity | None = None,
              residual_tol: float | None = 1e-4) -> HighDimCurve:
    """Integrate the (F, J) system and recover phi(gamma) on [0, gamma_max].

    ``method`` is ``"euler"`` (default, step 2e-5) or ``"midpoint"`` (second
    order, usable at coarser steps).  Samples are stored every
    ``record_every`` steps (default: round(1e-3/step), a gamma grid of 1e-3)
    and each carries the integrated-identity residual; exceeding
    ``residual_tol`` aborts unless the tolerance is None.
    """
    if gamma_max <= 0 or step <= 0:
        raise ValueError("gamma_max and step must be positive")
    if method not in ("euler", "midpoint"):
        raise ValueError(f"unknown method {method!r}")
    if density is None:
        density = manova_density(alpha, alphastar)
    elif (density.alpha, density.alphastar) != (alpha, alphastar):
        raise ValueError("density parameters disagree with (alpha, alpha*)")
    if record_every is None:
        record_every = max(1, int(round(1e-3 / step)))
    cplus = max(alpha + alphastar - 1.0, 0.0)

    n_steps = int(round(gamma_max / step))
    a = b = 0.0
    gammas, las, lbs, phis = [0.0], [0.0], [0.0], [0.0]
    # phi(0) = -1/2 log(alpha/4 * dF/dgamma(0)) = 0 since dF(0) = 4/alpha.

    da, db = _derivatives(density, cplus, 0.0, a, b)
    for n in range(1, n_steps + 1):
        gamma_prev = (n - 1) * step
        if method == "euler":
            a += step * da
            b += step * db
        else:
            ah = a + 0.5 * step * da
            bh = b + 0.5 * step * db
            da_h, db_h = _derivatives(density, cplus, gamma_prev + 0.5 * step, ah, bh)
            a += step * da_h
            b += step * db_h
        gamma = n * step
        da, db = _derivatives(density, cplus, gamma, a, b)
        if n % record_every == 0 or n == n_steps:
            gammas.append(gamma)
            las.append(a)
            lbs.append(b)
            phis.append(-0.5 * (np.log(alpha / 4.0) + a + np.log(da)))

    gammas = np.asarray(gammas)
    las = np.asarray(las)
    lbs = np.asarray(lbs)
    residuals = _identity_residuals(density, cplus, gammas, las, lbs)
    if residual_tol is not None:
        worst = float(np.max(np.abs(residuals)))
        if worst > residual_tol:
            raise HighDimSolverError(
                f"integrated-identity residual {worst:.3e} exceeds "
                f"{residual_tol:.1e}; reduce the step (or use method='midpoint')")
    return HighDimCurve(gammas=gammas, log_F=las, log_G=lbs,
                        phi=np.asarray(phis), residuals=residuals,
                        alpha=alpha, alphastar=alphastar)


def _identity_residuals(density, cplus, gammas, las, lbs) -> np.ndarray:
    """4 gamma - alpha log F - c+ log J - Theta(J-1) at the sample points."""
    x, w = density.bulk_nodes, density.bulk_weights
    out = 4.0 * gammas - density.alpha * las - cplus * (lbs - las)
    if not x.size:
        return out
    bulk_mass = float(np.sum(w))
    for lo in range(0, gammas.size, 32):
        hi = min(lo + 32, gammas.size)
        jinv = np.exp(las[lo:hi] - lbs[lo:hi])[:, None]
        # log(1 + (J-1)x) = log J + log(jinv + (1-jinv) x), summed over nodes
        th = (lbs[lo:hi] - las[lo:hi]) * bulk_mass \
            + np.log(jinv + (1.0 - jinv) * x[None, :]) @ w
        out[lo:hi] -= density.alpha * th
    return out


def _arcsine_chi_parts(gamma: float, a: float, b: float, alphastar: float):
    """Closed-form (e^eps A, B) for the arcsine bulk (alpha = alpha* = 1/2).

    With u = J - 1 and v = e^eps - 1, the arcsine resolvent integrals are

        int x/(1+ux) dmu   = (1 - (1+u)^{-1/2}) / u,
        int x/(1+ux)^2 dmu = (1/2) (1+u)^{-3/2},
        int 1/(1+ux)^2 dmu = (1 + u/2) (1+u)^{-3/2} - ... (assembled below),
        int x^2/(1+ux)^2 dmu = [1 - 2(1+u)^{-1/2} + (1+u/2)(1+u)^{-3/2}] / u^2.

    A fixed quadrature grid cannot resolve these for large gamma: the
    J^{-1/2}-order contributions live on x of order 1/J, which shrinks
    exponentially in gamma, hence the analytic branch.
    """
    J = np.exp(b - a)
    eps = 4.0 * gamma / alphastar
    e = np.exp(eps)
    u = J - 1.0
    v = e - 1.0
    inv_h = np.exp(-0.5 * np.log1p(u))        # (1+u)^{-1/2}
    inv_3h = inv_h / (1.0 + u)                # (1+u)^{-3/2}
    A = -np.expm1(-0.5 * np.log1p(u)) / u if u > 0 else 0.5
    if u > 1e-4:
        x2_res = (1.0 - 2.0 * inv_h + (1.0 + 0.5 * u) * inv_3h) / u**2
    else:
        x2_res = 0.375 - 0.625 * u            # 3/8 - 5u/8 + O(u^2)
    B = (1.0 + 0.5 * u + v) * inv_3h + v * v * x2_res
    return e * A, B


def _chi_parts(density: SpectralDensity, gamma, a, b):
    """Stable pieces of the overlap formula, vectorized over samples.

    ``gamma``, ``a``, ``b`` are arrays of equal length; returns
    (jinv, delta, q, eA, B) arrays with delta = log(J e^{-eps}) <= 0 and
    eA = e^eps * int x/(1+(J-1)x) dmu.
    """
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    jinv = np.exp(a - b)
    delta = (b - a) - 4.0 * gamma / density.alphastar
    emd = np.exp(-delta)                                 # e^eps / J >= 1
    x, w = density.bulk_nodes, density.bulk_weights
    q = np.zeros_like(gamma)
    bulk_B = np.zeros_like(gamma)
    if x.size:
        for lo in range(0, gamma.size, 32):
            hi = min(lo + 32, gamma.size)
            denom = jinv[lo:hi, None] + (1.0 - jinv[lo:hi, None]) * x[None, :]
            q[lo:hi] = (x[None, :] / denom) @ w
            # (1 + (e^eps - 1)x) / (1 + (J-1)x) in scaled form
            ratio = (jinv[lo:hi, None] + (emd[lo:hi, None] - jinv[lo:hi, None])
                     * x[None, :]) / denom
            bulk_B[lo:hi] = (ratio * ratio) @ w
    eA = emd * (density.atom1 + q)
    B = density.atom0 + density.atom1 * emd**2 + bulk_B
    return jinv, delta, q, eA, B


def overlap_limit_curve(curve: HighDimCurve, density: SpectralDensity) -> np.ndarray:
    """Limiting overlap chi(gamma) on the curve's sample grid.

    chi = sqrt(alpha/alpha*) e^{4 gamma/alpha*} A / sqrt(B) with
    A = int x/(1+(J-1)x) dmu and
    B = int ((1+(e^{4 gamma/alpha*}-1)x)/(1+(J-1)x))^2 dmu.
    """
    if (curve.alpha, curve.alphastar) != (density.alpha, density.alphastar):
        raise ValueError("curve and density parameters disagree")
    pref = np.sqrt(curve.alpha / curve.alphastar)
    if density.is_arcsine:
        eA = np.empty_like(curve.gammas)
        B = np.empty_like(curve.gammas)
        for i, (g, a, b) in enumerate(zip(curve.gammas, curve.log_F, curve.log_G)):
            eA[i], B[i] = _arcsine_chi_parts(g, a, b, density.alphastar)
    else:
        _, _, _, eA, B = _chi_parts(density, curve.gammas, curve.log_F,
                                    curve.log_G)
    return np.minimum(pref * eA / np.sqrt(B), 1.0)


def overlap_gap_curve(curve: HighDimCurve, density: SpectralDensity) -> np.ndarray:
    """Gap to the limit, chi_inf - chi(gamma), with chi_inf = min(sqrt(a/a*), 1).

    For alpha <= alpha* the gap decays exponentially and a direct difference
    of O(1) numbers is swamped by round-off within a few units of gamma, so
    the difference is evaluated through the exact decomposition

        B - (e^eps A)^2 = int r^2 + 2 int r p + Var(p),
        r = (1-x)/(1+(J-1)x),  p = x e^eps/(1+(J-1)x),

    whose terms are all formed from nonnegative node values.  For
    alpha > alpha* the gap is only polynomial and the direct difference is
    accurate.

    At alpha = alpha* the gap is carried by spectral mass at x of order 1/J,
    which escapes any fixed quadrature grid once gamma is a few units; the
    arcsine closed forms (alpha = alpha* = 1/2) evaluate it exactly, and
    other alpha = alpha* values are only trustworthy while
    exp(-4 gamma/alpha*) stays above the smallest quadrature node.
    """
    if (curve.alpha, curve.alphastar) != (density.alpha, density.alphastar):
        raise ValueError("curve and density parameters disagree")
    alpha, alphastar = curve.alpha, curve.alphastar
    if alpha > alphastar:
        return 1.0 - overlap_limit_curve(curve, density)
    if density.is_arcsine:
        out = np.empty_like(curve.gammas)
        for i, (g, a, b) in enumerate(zip(curve.gammas, curve.log_F, curve.log_G)):
            eA, B = _arcsine_chi_parts(g, a, b, density.alphastar)
            out[i] = (B - eA * eA) / (np.sqrt(B) * (np.sqrt(B) + eA))
        return out

    pref = np.sqrt(alpha / alphastar)
    x, w = density.bulk_nodes, density.bulk_weights
    jinv, delta, _, eA, B = _chi_parts(density, curve.gammas, curve.log_F,
                                       curve.log_G)
    emd = np.exp(-delta)
    out = np.empty_like(curve.gammas)
    for lo in range(0, curve.gammas.size, 32):
        hi = min(lo + 32, curve.gammas.size)
        ji = jinv[lo:hi, None]
        em = emd[lo:hi, None]
        denom = ji + (1.0 - ji) * x[None, :]
        r = ji * (1.0 - x[None, :]) / denom
        p = em * x[None, :] / denom
        # atom at 1: r = 0, p = e^{-delta}; atom at 0 is absent for a <= a*.
        mean_p = p @ w + density.atom1 * emd[lo:hi]
        int_r2 = (r * r) @ w
        int_rp = (r * p) @ w
        dev = p - mean_p[:, None]
        var_p = (dev * dev) @ w + density.atom1 * (emd[lo:hi] - mean_p) ** 2
        num = int_r2 + 2.0 * int_rp + var_p
        out[lo:hi] = pref * num / (np.sqrt(B[lo:hi]) * (np.sqrt(B[lo:hi]) + eA[lo:hi]))
    return out


@dataclass(frozen=True)
class HistogramReport:
    """Per-bin comparison of an empirical spectrum against the analytic law."""

    edges: np.ndarray
    empirical: np.ndarray
    analytic: np.ndarray

    @property
    def abs_diff(self) -> np.ndarray:
        return np.abs(self.empirical - self.analytic)

    @property
    def sup_discrepancy(self) -> float:
        return float(np.max(self.abs_diff))


def density_histogram_compare(eigs, density: SpectralDensity,
                              bins: int = 30) -> HistogramReport:
    """Compare an eigenvalue sample against the analytic measure on equal
    bins over [0, 1] (masses, not densities; atoms count in their bins)."""
    eigs = np.asarray(eigs, dtype=float).ravel()
    if eigs.size == 0:
        raise ValueError("empty eigenvalue sample")
    if eigs.min() < -1e-8 or eigs.max() > 1 + 1e-8:
        raise ValueError("eigenvalues must lie in [0, 1]")
    eigs = np.clip(eigs, 0.0, 1.0)
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(eigs, bins=edges)
    empirical = counts / eigs.size

    analytic = np.zeros(bins)
    idx = np.clip(np.searchsorted(edges, density.bulk_nodes, side="right") - 1,
                  0, bins - 1)
    np.add.at(analytic, idx, density.bulk_weights)
    analytic[0] += density.atom0
    analytic[-1] += density.atom1
    return HistogramReport(edges=edges, empirical=empirical, analytic=analytic)


def sample_bulk(density: SpectralDensity, n: int, rng) -> np.ndarray:
    """Draw n points from the (normalized) bulk by inverse-CDF on the
    quadrature grid."""
    from .sampling import as_generator

    if density.bulk_mass <= 0:
        raise ValueError("the bulk carries no mass for these parameters")
    rng = as_generator(rng)
    cdf = np.cumsum(density.bulk_weights)
    cdf /= cdf[-1]
    u = rng.random(n)
    return np.interp(u, cdf, density.bulk_nodes)
