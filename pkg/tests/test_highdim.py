import numpy as np
import pytest

from quadflow import (HighDimSolverError, density_histogram_compare,
                      manova_density, overlap_gap_curve, overlap_limit_curve,
                      sample_bulk, solve_phi, theta, theta_prime)

GRID = [(a, s) for a in (0.25, 0.5, 0.75) for s in (0.25, 0.5, 0.75)]


def test_bulk_edges_match_closed_form():
    dens = manova_density(0.3, 0.5)
    assert dens.r_minus == pytest.approx(0.041743, abs=1e-6)
    assert dens.r_plus == pytest.approx(0.958257, abs=1e-6)
    assert dens.atom0 == 0.0
    assert dens.atom1 == 0.0


def test_equal_ranks_touch_zero():
    dens = manova_density(0.4, 0.4)
    assert dens.r_minus == pytest.approx(0.0, abs=1e-15)


def test_full_ranks_degenerate_to_atom():
    dens = manova_density(1.0, 1.0)
    assert dens.atom1 == pytest.approx(1.0)
    assert dens.bulk_mass == 0.0
    assert dens.mean() == pytest.approx(1.0)


def test_measure_invariants_on_grid():
    for a, s in GRID:
        dens = manova_density(a, s)
        assert abs(dens.total_mass() - 1.0) <= 1e-6, (a, s)
        assert abs(dens.mean() - s) <= 1e-6, (a, s)
        assert dens.r_minus >= 0.0 and dens.r_plus <= 1.0


def test_theta_at_zero():
    dens = manova_density(0.3, 0.5)
    assert theta(0.0, dens) == 0.0
    with pytest.raises(ValueError):
        theta(-1.0, dens)


def test_theta_prime_matches_finite_differences():
    dens = manova_density(0.3, 0.5)
    for u in (0.5, 5.0, 50.0):
        h = 1e-5 * max(1.0, u)
        fd = (theta(u + h, dens) - theta(u - h, dens)) / (2 * h)
        tp = theta_prime(u, dens)
        assert abs(tp - fd) <= 1e-5 * abs(tp)
        assert tp >= 0.0


def test_theta_log_slope_asymptotics():
    # Theta(u) = c log(u) + Omega + O(1/u) with
    # c = (1 - |a - a*| - |a + a* - 1|)/2; the constant Omega drops out of
    # the unit-log-step difference.
    dens = manova_density(0.3, 0.5)
    slope = theta(np.e * 1e6, dens) - theta(1e6, dens)
    assert abs(slope - 0.3) <= 0.02 * 0.3


def test_solve_phi_initial_values_and_monotonicity():
    curve = solve_phi(0.5, 0.25, 1.0, step=2e-4, method="midpoint")
    assert curve.phi[0] == 0.0
    assert curve.log_F[0] == 0.0 and curve.log_G[0] == 0.0
    assert np.all(np.diff(curve.log_F) > 0)
    assert np.all(np.diff(curve.log_G) > 0)
    J = curve.J
    assert np.all(np.diff(J) >= 0)
    # J < e^{4 gamma / alpha*} and F <= e^{4 gamma / alpha}
    assert np.all(curve.log_G - curve.log_F < 4.0 * curve.gammas / 0.25 + 1e-12)
    assert np.all(curve.log_F <= 4.0 * curve.gammas / 0.5 + 1e-12)


def test_solve_phi_step_halving_consistency():
    a = solve_phi(0.5, 0.25, 3.0, step=4e-4, method="euler", residual_tol=None,
                  record_every=250)
    b = solve_phi(0.5, 0.25, 3.0, step=2e-4, method="euler", residual_tol=None,
                  record_every=500)
    assert np.array_equal(a.gammas, b.gammas)
    assert np.max(np.abs(a.phi - b.phi)) <= 1e-3


def test_solve_phi_regime_shapes():
    # alpha > alpha*: phi grows without saturating (log-like);
    # alpha = alpha*: phi stays bounded; alpha < alpha*: asymptotic slope -4.
    log_curve = solve_phi(0.5, 0.25, 3.0, step=1e-4, method="midpoint")
    assert log_curve.phi[-1] > log_curve.phi[len(log_curve.phi) // 2] > 0
    flat_curve = solve_phi(0.5, 0.5, 3.0, step=1e-4, method="midpoint")
    assert np.max(flat_curve.phi) < 1.0
    lin_curve = solve_phi(0.25, 0.5, 3.0, step=1e-4, method="midpoint")
    g, p = lin_curve.gammas, lin_curve.phi
    tail = g >= 2.0
    slope = np.polyfit(g[tail], p[tail], 1)[0]
    assert slope == pytest.approx(-4.0, rel=0.05)


def test_solve_phi_residual_certificate():
    curve = solve_phi(0.25, 0.5, 1.0, step=1e-4, method="midpoint")
    assert np.max(np.abs(curve.residuals)) <= 1e-6
    with pytest.raises(HighDimSolverError):
        solve_phi(0.5, 0.25, 1.0, step=5e-2, method="euler", residual_tol=1e-6)


def test_overlap_curve_limits():
    for a, s in [(0.5, 0.25), (0.25, 0.5)]:
        dens = manova_density(a, s)
        curve = solve_phi(a, s, 4.0, step=1e-4, method="midpoint", density=dens)
        chi = overlap_limit_curve(curve, dens)
        assert np.all((chi >= 0.0) & (chi <= 1.0))
        assert chi[0] == pytest.approx(np.sqrt(a * s), rel=1e-6)
        assert chi[-1] == pytest.approx(min(np.sqrt(a / s), 1.0), rel=0.02)


def test_overlap_gap_matches_direct_difference_at_moderate_gamma():
    for a, s in [(0.25, 0.5), (0.5, 0.5)]:
        dens = manova_density(a, s)
        curve = solve_phi(a, s, 1.0, step=1e-4, method="midpoint", density=dens)
        chi = overlap_limit_curve(curve, dens)
        gap = overlap_gap_curve(curve, dens)
        chi_inf = min(np.sqrt(a / s), 1.0)
        i = len(gap) // 2
        assert gap[i] == pytest.approx(chi_inf - chi[i], rel=1e-6)


def test_arcsine_gap_reaches_tiny_values():
    dens = manova_density(0.5, 0.5)
    curve = solve_phi(0.5, 0.5, 5.0, step=1e-4, method="midpoint", density=dens,
                      record_every=100)
    gap = overlap_gap_curve(curve, dens)
    # direct 1 - chi collapses to float noise well before gamma = 5; the
    # closed-form branch keeps resolving the sqrt(gamma) e^{-4 gamma} decay
    assert 1e-10 < gap[-1] < 1e-7
    assert np.all(gap[1:] > 0)


def test_histogram_compare_inverse_cdf_self_consistency():
    dens = manova_density(0.3, 0.5)
    samples = sample_bulk(dens, 200_000, np.random.default_rng(0))
    report = density_histogram_compare(samples, dens, bins=30)
    assert report.sup_discrepancy <= 5e-3
    assert report.analytic.sum() == pytest.approx(1.0, abs=1e-6)


def test_histogram_compare_counts_atoms():
    dens = manova_density(0.75, 0.25)   # atom at 0 with mass 2/3
    assert dens.atom0 == pytest.approx(2.0 / 3.0)
    eigs = np.concatenate([np.zeros(6000), sample_bulk(dens, 3000,
                                                       np.random.default_rng(1))])
    report = density_histogram_compare(eigs, dens, bins=30)
    assert report.sup_discrepancy <= 0.02


def test_histogram_compare_rejects_bad_input():
    dens = manova_density(0.3, 0.5)
    with pytest.raises(ValueError):
        density_histogram_compare([], dens)
    with pytest.raises(ValueError):
        density_histogram_compare([1.5], dens)


def test_density_csv_export(tmp_path):
    dens = manova_density(0.3, 0.5, n_nodes=500)
    csv, js = tmp_path / "bulk.csv", tmp_path / "bulk.json"
    dens.to_csv(csv, js)
    lines = csv.read_text().splitlines()
    assert lines[0] == "x,w"
    assert len(lines) == dens.bulk_nodes.size + 1
    import json
    header = json.loads(js.read_text())
    assert header["atom0"] == 0.0 and "r_minus" in header


def test_parameter_validation():
    with pytest.raises(ValueError):
        manova_density(0.0, 0.5)
    with pytest.raises(ValueError):
        manova_density(0.5, 1.5)
    with pytest.raises(ValueError):
        solve_phi(0.5, 0.25, -1.0)
    dens = manova_density(0.3, 0.5)
    with pytest.raises(ValueError):
        solve_phi(0.5, 0.25, 1.0, density=dens)  # parameter mismatch
