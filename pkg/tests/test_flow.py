import numpy as np
import pytest

from quadflow import (FlowConfig, FlowDivergenceError, GramState,
                      SpectrumSpec, fixed_point_gram, integrate,
                      orthonormal_weights, phi_curve, sample_gaussian_weights,
                      sample_stiefel)
from quadflow.flow import phi_ensemble


def _random_problem(seed, d=12, m=4, mstar=4):
    rng = np.random.default_rng(seed)
    W0 = sample_gaussian_weights(d, m, rng)
    Zs = GramState.from_weights(sample_gaussian_weights(d, mstar, rng))
    return W0, Zs


def test_stationary_at_optimum():
    rng = np.random.default_rng(0)
    W0 = sample_gaussian_weights(8, 4, rng)
    Zs = GramState.from_weights(W0)
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=5.0, record_stride=10))
    assert traj.losses.max() <= 1e-20
    assert np.abs(traj.phi).max() <= 1e-12


def test_strong_recovery_overparameterized():
    rng = np.random.default_rng(1)
    W0 = sample_gaussian_weights(30, 8, rng)
    Zs = GramState.from_weights(sample_gaussian_weights(30, 8, rng))
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=2000.0,
                                        record_stride=2000))
    assert traj.overlaps[-1] >= 0.999
    assert traj.losses[-1] <= 1e-8


def test_underparameterized_limit_matches_oracle():
    rng = np.random.default_rng(2)
    V = sample_stiefel(12, 2, rng).U
    spec = SpectrumSpec(np.array([0.6, 0.4]), V)
    W0 = sample_gaussian_weights(12, 1, rng)
    traj = integrate(W0, spec.gram(), FlowConfig(step_size=1e-2, horizon=3000.0,
                                                 record_stride=3000))
    Zpred = fixed_point_gram(spec, 1)
    assert np.linalg.norm(traj.final_W.gram() - Zpred.matrix) <= 1e-4


def test_loss_monotone_along_recorded_samples():
    W0, Zs = _random_problem(3)
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=50.0,
                                        record_stride=10))
    assert np.all(np.diff(traj.losses) <= 1e-12)


def test_step_halving_changes_final_loss_mildly():
    # poly regime (m > m*): finite final loss, first-order consistency
    rng = np.random.default_rng(4)
    W0 = sample_gaussian_weights(20, 8, rng)
    Zs = GramState.from_weights(orthonormal_weights(20, 4, rng))
    base = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=200.0,
                                        record_stride=100))
    half = integrate(W0, Zs, FlowConfig(step_size=5e-3, horizon=200.0,
                                        record_stride=200))
    assert abs(half.losses[-1] - base.losses[-1]) <= 0.05 * base.losses[-1]


def test_rank_preserved_along_flow():
    W0, Zs = _random_problem(5, d=15, m=4, mstar=6)
    smins = []
    integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=100.0, record_stride=500),
              on_record=lambda t, W: smins.append(np.linalg.svd(W, compute_uv=False)[-1]))
    assert min(smins) > 0


def test_divergence_guard():
    W0, Zs = _random_problem(6)
    with pytest.raises(FlowDivergenceError):
        integrate(W0, Zs, FlowConfig(step_size=50.0, horizon=100.0))


def test_trajectory_records_and_phi():
    W0, Zs = _random_problem(7)
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=1.0, record_stride=10))
    assert traj.times[0] == 0.0
    assert traj.phi[0] == 0.0
    assert traj.times[-1] == pytest.approx(1.0)
    gam, phi = phi_curve(traj)
    assert np.array_equal(phi, traj.phi)
    assert np.allclose(gam, traj.times / W0.d)


def test_rescaled_horizon_units():
    W0, Zs = _random_problem(8, d=10)
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=0.5,
                                        record_stride=100, rescaled=True))
    # horizon in gamma units: final t = 0.5 * d
    assert traj.times[-1] == pytest.approx(5.0)
    assert traj.gammas[-1] == pytest.approx(0.5)


def test_csv_export_schema(tmp_path):
    W0, Zs = _random_problem(9)
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-2, horizon=0.5, record_stride=10))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,gamma,loss,trace_gap,phi,overlap"
    assert len(lines) == len(traj.times) + 1
    row = [float(v) for v in lines[1].split(",")]
    assert len(row) == 6


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(step_size=0.0, horizon=1.0)
    with pytest.raises(ValueError):
        FlowConfig(step_size=1e-2, horizon=-1.0)
    with pytest.raises(ValueError):
        FlowConfig(step_size=1e-2, horizon=1.0, record_stride=0)


def test_phi_regime_shapes_finite_d():
    # more students than teachers: phi_d grows, log-like (concave);
    # fewer students: phi_d falls asymptotically linearly, slope near
    # d * (limit trace gap) = -4 / (1 + 8/d) for m = d/4, m* = d/2.
    from quadflow.experiments import phi_curves_finite_d
    d = 64
    gam, phi, _, _ = phi_curves_finite_d(d, 0.5, 0.25, seed=0, n_seeds=2,
                                         eta=1e-2, gamma_max=2.0)
    tail = gam >= 0.2
    inc = np.diff(phi[tail])
    assert np.all(inc > 0)
    # log-like growth: increments shrink between window halves
    assert inc[: len(inc) // 2].mean() > 1.5 * inc[len(inc) // 2:].mean()

    gam, phi, _, _ = phi_curves_finite_d(d, 0.25, 0.5, seed=0, n_seeds=2,
                                         eta=1e-2, gamma_max=2.0)
    tail = gam >= 1.0
    slope = np.polyfit(gam[tail], phi[tail], 1)[0]
    assert -4.5 < slope < -2.5


def test_phi_ensemble_matches_single_runs():
    d, m, mstar = 16, 8, 4
    rngs = [np.random.default_rng(100 + s) for s in range(3)]
    W0s = np.stack([sample_stiefel(d, m, r).U / np.sqrt(m) for r in rngs])
    Ls = np.stack([sample_stiefel(d, mstar, r).U / np.sqrt(mstar) for r in rngs])
    gam, phis, losses, chis = phi_ensemble(W0s, Ls, 1.0, 1.0 / mstar,
                                           1e-2, 0.5, record_every=10)
    for s in range(3):
        traj = integrate(
            __import__("quadflow").WeightMatrix(W0s[s]),
            GramState.from_matrix(Ls[s] @ Ls[s].T),
            FlowConfig(step_size=1e-2, horizon=0.5, record_stride=10, rescaled=True))
        assert np.allclose(traj.phi, phis[s], atol=1e-12)
        assert np.allclose(traj.overlaps, chis[s], atol=1e-10)
