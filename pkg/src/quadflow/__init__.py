"""Numerical laboratory for the population-loss gradient flow of shallow
quadratic-activation teacher-student networks.

The package simulates the flow directly (`flow`), evaluates its closed-form
implicit solution (`implicit`), provides the finite-dimensional limit and
rate oracles (`theory`), solves the infinite-dimensional self-consistent
equations (`highdim`), and regenerates all figure data through named,
seeded experiments (`experiments`, `cli`).
"""

from .model import (GramState, WeightMatrix, loss_gradient, overlap,
                    population_loss, predict)
from .sampling import (OrthonormalFrame, as_generator,
                       build_projection_product, orthonormal_weights,
                       sample_gaussian_weights, sample_stiefel)
from .flow import (FlowConfig, FlowDivergenceError, FlowTrajectory, integrate,
                   phi_curve)
from .implicit import (ImplicitState, ImplicitTrajectory, IllConditionedError,
                       SelfConsistencyError, check_self_consistency,
                       evolve_implicit)
from .theory import (RateClass, RateRegime, SpectrumSpec, classify_rate,
                     fit_exponential_rate, fixed_point_gram, max_overlap,
                     poly_rate_spread, random_overlap_limit)
from .highdim import (HighDimCurve, HighDimSolverError, HistogramReport,
                      SpectralDensity, density_histogram_compare,
                      manova_density, overlap_gap_curve, overlap_limit_curve,
                      sample_bulk, solve_phi, theta, theta_prime)

__version__ = "0.1.0"

__all__ = [
    "GramState", "WeightMatrix", "predict", "population_loss",
    "loss_gradient", "overlap",
    "OrthonormalFrame", "as_generator", "sample_stiefel",
    "sample_gaussian_weights", "orthonormal_weights",
    "build_projection_product",
    "FlowConfig", "FlowTrajectory", "FlowDivergenceError", "integrate",
    "phi_curve",
    "ImplicitState", "ImplicitTrajectory", "IllConditionedError",
    "SelfConsistencyError", "evolve_implicit", "check_self_consistency",
    "SpectrumSpec", "RateClass", "RateRegime", "fixed_point_gram",
    "classify_rate", "random_overlap_limit", "max_overlap",
    "fit_exponential_rate", "poly_rate_spread",
    "SpectralDensity", "HighDimCurve", "HighDimSolverError",
    "HistogramReport", "manova_density", "theta", "theta_prime", "solve_phi",
    "overlap_limit_curve", "overlap_gap_curve", "density_histogram_compare",
    "sample_bulk",
]
