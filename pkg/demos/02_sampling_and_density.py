"""The projection-product spectrum and its deterministic limit.

For independent uniform orthonormal frames U0 (d x m) and U* (d x m*), the
eigenvalues of Y = U0^T U* U*^T U0 fill out a fixed limiting law as d grows
with m/d -> alpha and m*/d -> alpha*: atoms at 0 and 1 plus a bulk on
[r-, r+] (a MANOVA / Jacobi-type measure).
"""

import numpy as np

from quadflow import (build_projection_product, density_histogram_compare,
                      manova_density, sample_stiefel)

alpha, alphastar, d = 0.3, 0.5, 600
m, mstar = int(alpha * d), int(alphastar * d)

rng = np.random.default_rng(42)
U0 = sample_stiefel(d, m, rng)
Ustar = sample_stiefel(d, mstar, rng)
print(f"frame check: ||U0^T U0 - I|| = "
      f"{np.linalg.norm(U0.U.T @ U0.U - np.eye(m)):.2e}")

Y = build_projection_product(U0, Ustar)
eigs = np.linalg.eigvalsh(Y)
print(f"spectrum of Y: [{eigs.min():.4f}, {eigs.max():.4f}], "
      f"mean {eigs.mean():.4f} (limit alpha* = {alphastar})")

density = manova_density(alpha, alphastar)
print(f"\nanalytic law: bulk on [{density.r_minus:.4f}, {density.r_plus:.4f}], "
      f"atoms ({density.atom0:.3f}, {density.atom1:.3f})")
print(f"normalization: total mass = {density.total_mass():.9f}, "
      f"mean = {density.mean():.9f}")

report = density_histogram_compare(eigs, density, bins=30)
print(f"\n30-bin comparison at d={d}: sup |empirical - analytic| mass = "
      f"{report.sup_discrepancy:.4f}")

# atoms appear when the ranks force eigenvalue pile-up at 0 or 1
wide = manova_density(0.75, 0.25)
print(f"\nalpha=0.75, alpha*=0.25: atom at 0 carries mass {wide.atom0:.4f} "
      "(students that miss the teacher span entirely)")
