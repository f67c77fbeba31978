import numpy as np
import pytest

from quadflow import (GramState, RateRegime, SpectrumSpec, classify_rate,
                      fit_exponential_rate, fixed_point_gram, max_overlap,
                      overlap, poly_rate_spread, random_overlap_limit,
                      sample_stiefel)


def _spec(seed, eigenvalues, d=10):
    V = sample_stiefel(d, len(eigenvalues), np.random.default_rng(seed)).U
    return SpectrumSpec(np.asarray(eigenvalues, dtype=float), V)


def test_fixed_point_overparameterized_returns_teacher():
    spec = _spec(0, [0.5, 0.3, 0.2])
    Z = fixed_point_gram(spec, m=5)
    assert np.allclose(Z.matrix, spec.gram().matrix, atol=1e-12)


def test_fixed_point_equal_ranks_has_no_shift():
    spec = _spec(1, [0.7, 0.3])
    Z = fixed_point_gram(spec, m=2)
    assert np.allclose(Z.matrix, spec.gram().matrix, atol=1e-12)


def test_fixed_point_tau_arithmetic():
    # m=1, m*=2, mu=(0.6, 0.4): tau = 0.4/3, kept eigenvalue 0.6 + 0.4/3
    spec = _spec(2, [0.6, 0.4])
    Z = fixed_point_gram(spec, m=1)
    assert Z.eigenvalues[0] == pytest.approx(0.6 + 0.4 / 3.0, rel=1e-12)
    assert Z.rank() == 1
    v1 = spec.eigenvectors[:, 0]
    assert np.allclose(Z.matrix, (0.6 + 0.4 / 3.0) * np.outer(v1, v1), atol=1e-12)


def test_fixed_point_rejects_repeated_spectrum_when_truncating():
    spec = _spec(3, [0.5, 0.5, 0.2])
    with pytest.raises(ValueError):
        fixed_point_gram(spec, m=2)
    # no truncation -> no simplicity requirement
    fixed_point_gram(spec, m=3)


def test_classify_rate_regimes():
    spec3 = _spec(4, [0.5, 0.3, 0.2], d=6)
    # m = m* < d
    rc = classify_rate(3, 3, 6, spec3)
    assert rc.regime is RateRegime.EXP_4MU
    assert rc.mu == pytest.approx(0.2)
    assert rc.exponent == pytest.approx(-0.8)
    # m, d > m*
    rc = classify_rate(5, 3, 6, spec3)
    assert rc.regime is RateRegime.POLY_INV_T2
    assert rc.exponent == -2.0
    # m, m* >= d
    spec_full = _spec(5, [0.4, 0.3, 0.2, 0.1], d=4)
    rc = classify_rate(4, 4, 4, spec_full)
    assert rc.regime is RateRegime.EXP_8MU
    assert rc.exponent == pytest.approx(-0.8)


def test_classify_rate_rejects_underparameterized():
    spec = _spec(6, [0.5, 0.3, 0.2], d=6)
    with pytest.raises(ValueError):
        classify_rate(2, 3, 6, spec)


def test_random_overlap_limit_values():
    assert random_overlap_limit(1.0, 1.0) == 1.0
    assert random_overlap_limit(0.25, 0.25) == pytest.approx(0.25)
    assert random_overlap_limit(0.3, 0.5) == pytest.approx(np.sqrt(0.15), rel=1e-12)
    with pytest.raises(ValueError):
        random_overlap_limit(0.0, 0.5)


def test_max_overlap_values():
    assert max_overlap(5, 3) == 1.0
    assert max_overlap(2, 2) == 1.0
    assert max_overlap(1, 4) == pytest.approx(0.5)


def test_max_overlap_brute_force_bound():
    # random rank-one PSD matrices never beat min(sqrt(m/m*), 1)
    d, mstar = 8, 4
    rng = np.random.default_rng(7)
    proj = sample_stiefel(d, mstar, rng).U
    Zstar = proj @ proj.T
    bound = max_overlap(1, mstar)
    best = 0.0
    for _ in range(2000):
        x = rng.standard_normal(d)
        best = max(best, overlap(np.outer(x, x), Zstar))
    assert best <= bound + 1e-9
    # the bound is attained by a vector inside the teacher span
    x = proj[:, 0]
    assert overlap(np.outer(x, x), Zstar) == pytest.approx(bound, rel=1e-10)


def test_spectrum_spec_validation():
    rng = np.random.default_rng(8)
    V = sample_stiefel(5, 2, rng).U
    with pytest.raises(ValueError):
        SpectrumSpec(np.array([0.3, 0.5]), V)       # ascending
    with pytest.raises(ValueError):
        SpectrumSpec(np.array([0.5, 0.0]), V)       # nonpositive
    with pytest.raises(ValueError):
        SpectrumSpec(np.array([0.5, 0.3]), np.ones((5, 2)))  # not orthonormal


def test_spectrum_roundtrip_from_gram():
    spec = _spec(9, [0.6, 0.25, 0.15])
    back = SpectrumSpec.from_gram(spec.gram())
    assert np.allclose(back.eigenvalues, spec.eigenvalues, atol=1e-12)


def test_fit_exponential_rate_on_synthetic_data():
    t = np.linspace(0.0, 100.0, 400)
    losses = 3.7 * np.exp(-0.25 * t)
    assert fit_exponential_rate(t, losses) == pytest.approx(-0.25, rel=1e-10)
    # floor masks the flat tail
    noisy = np.maximum(losses, 1e-26)
    assert fit_exponential_rate(noisy, np.maximum(losses, 1e-30)) != 0.0


def test_poly_rate_spread_on_synthetic_data():
    t = np.linspace(1.0, 1000.0, 500)
    assert poly_rate_spread(t, 2.0 / t**2) == pytest.approx(1.0, rel=1e-10)
    spread = poly_rate_spread(t, np.exp(-0.05 * t) + 1e-30)
    assert spread > 3.0
