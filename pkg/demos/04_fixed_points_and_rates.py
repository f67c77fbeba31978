"""Where the flow ends up, and how fast it gets there.

With at least as many students as teachers (m >= m*) the flow recovers Z*
exactly.  With m < m* and a simple teacher spectrum it keeps the top m
eigendirections, each eigenvalue inflated by tau = (sum of dropped
eigenvalues)/(m+2).  The tail decay of the loss has three regimes, governed
by the smallest nonzero teacher eigenvalue mu:

    m, m* >= d      loss ~ exp(-8 mu t)
    m = m* < d      loss ~ exp(-4 mu t)
    m, d > m*       loss ~ 1/t^2
"""

import numpy as np

from quadflow import (FlowConfig, SpectrumSpec, fit_exponential_rate,
                      fixed_point_gram, integrate, poly_rate_spread,
                      sample_gaussian_weights, sample_stiefel)
from quadflow.experiments import rate_experiment

# --- underparameterized fixed point with the tau shift --------------------
rng = np.random.default_rng(1)
d = 16
V = sample_stiefel(d, 2, rng).U
spec = SpectrumSpec(np.array([0.6, 0.4]), V)
predicted = fixed_point_gram(spec, m=1)
print("teacher eigenvalues (0.6, 0.4), single student neuron:")
print(f"  predicted limit keeps 0.6 shifted by tau = 0.4/3: "
      f"top eigenvalue {predicted.eigenvalues[0]:.6f}")

W0 = sample_gaussian_weights(d, 1, rng)
traj = integrate(W0, spec.gram(),
                 FlowConfig(step_size=1e-2, horizon=2000.0, record_stride=2000))
err = np.linalg.norm(traj.final_W.gram() - predicted.matrix)
print(f"  flow limit matches to ||.||_F = {err:.2e}")

# --- the three decay regimes ----------------------------------------------
print("\nloss-decay regimes (orthonormal teachers, Gaussian students):")
traj, rate = rate_experiment("exp4", d=60, seed=0, eta=1e-2, horizon=500.0)
slope = fit_exponential_rate(traj.times, traj.losses)
print(f"  m = m* = d/2:  fitted slope {slope:+.4f} vs -4 mu = {rate.exponent:+.4f}")

traj, rate = rate_experiment("exp8", d=30, seed=0, eta=1e-2, horizon=350.0)
slope = fit_exponential_rate(traj.times, traj.losses)
print(f"  m = m* = d:    fitted slope {slope:+.4f} vs -8 mu = {rate.exponent:+.4f}")

traj, _rate = rate_experiment("poly", d=60, seed=0, eta=1e-2, horizon=1500.0)
spread = poly_rate_spread(traj.times, traj.losses)
print(f"  m, d > m*:     t^2 L stays within max/min = {spread:.2f} "
      "over the final decade (bounded <=> 1/t^2 decay)")
