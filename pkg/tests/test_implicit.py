import dataclasses

import numpy as np
import pytest

from quadflow import (FlowConfig, GramState, SpectrumSpec,
                      check_self_consistency, evolve_implicit, integrate,
                      sample_gaussian_weights, sample_stiefel)
from quadflow.implicit import SelfConsistencyError


def _problem(seed, d=8, m=3, mstar=3):
    rng = np.random.default_rng(seed)
    W0 = sample_gaussian_weights(d, m, rng)
    Zs = GramState.from_weights(sample_gaussian_weights(d, mstar, rng))
    return W0, Zs


def test_initial_gram_is_exact():
    W0, Zs = _problem(0)
    traj = evolve_implicit(W0, Zs, T=0.01, dt=1e-3)
    assert np.linalg.norm(traj.grams[0] - W0.gram()) == 0.0
    assert traj.psis[0] == 0.0
    assert traj.residuals[0] == 0.0


def test_matches_direct_flow():
    W0, Zs = _problem(1)
    imp = evolve_implicit(W0, Zs, T=5.0, dt=2.5e-4, record_stride=2000)
    grams = []
    traj = integrate(W0, Zs, FlowConfig(step_size=1e-4, horizon=5.0,
                                        record_stride=5000),
                     on_record=lambda t, W: grams.append(W @ W.T))
    ti = np.round(imp.times, 9)
    tf = np.round(traj.times, 9)
    _, ia, ib = np.intersect1d(ti, tf, return_indices=True)
    assert len(ia) >= 5
    sup = max(np.linalg.norm(imp.grams[i] - grams[j]) for i, j in zip(ia, ib))
    assert sup <= 1e-3


@pytest.mark.slow
def test_matches_direct_flow_across_ten_seeds():
    for seed in range(10):
        W0, Zs = _problem(100 + seed, d=6, m=2, mstar=2)
        imp = evolve_implicit(W0, Zs, T=3.0, dt=2.5e-4, record_stride=1200)
        grams = []
        traj = integrate(W0, Zs, FlowConfig(step_size=2e-4, horizon=3.0,
                                            record_stride=1500),
                         on_record=lambda t, W: grams.append(W @ W.T))
        ti = np.round(imp.times, 9)
        tf = np.round(traj.times, 9)
        _, ia, ib = np.intersect1d(ti, tf, return_indices=True)
        sup = max(np.linalg.norm(imp.grams[i] - grams[j])
                  for i, j in zip(ia, ib))
        assert sup <= 1e-3, f"seed {seed}: {sup:.2e}"


def test_residual_stays_small():
    for seed in range(3):
        W0, Zs = _problem(seed, d=10, m=3, mstar=3)
        imp = evolve_implicit(W0, Zs, T=10.0, dt=2.5e-4, record_stride=400)
        assert imp.residuals.max() <= 1e-6


def test_residual_detector_fires_on_perturbation():
    W0, Zs = _problem(2)
    imp = evolve_implicit(W0, Zs, T=2.0, dt=5e-4)
    st = imp.final_state
    clean = check_self_consistency(st)
    bad = dataclasses.replace(st, psi=st.psi + 1e-3)
    assert clean <= 1e-6
    assert check_self_consistency(bad) >= 1e-4


def test_abort_on_residual_breach():
    W0, Zs = _problem(3)
    with pytest.raises(SelfConsistencyError):
        evolve_implicit(W0, Zs, T=5.0, dt=2.5e-4, residual_tol=1e-15)


def test_gram_symmetric_psd_full_rank():
    W0, Zs = _problem(4, d=9, m=4, mstar=2)
    imp = evolve_implicit(W0, Zs, T=5.0, dt=5e-4, record_stride=1000)
    for Z in imp.grams:
        assert np.linalg.norm(Z - Z.T) <= 1e-10
        vals = np.linalg.eigvalsh(Z)
        assert vals.min() >= -1e-10
    # full-rank initialization stays full rank
    ranks = {np.linalg.matrix_rank(Z, tol=1e-12) for Z in imp.grams}
    assert ranks == {4}


@pytest.mark.slow
def test_psi_per_time_approaches_teacher_trace():
    # long-horizon mean slope of psi: psi(T)/T -> Tr Z*; a low-spread
    # spectrum keeps the resolvent well conditioned out to T = 50
    rng = np.random.default_rng(11)
    V = sample_stiefel(10, 3, rng).U
    Zs = SpectrumSpec(np.array([0.36, 0.33, 0.31]), V).gram()
    W0 = sample_gaussian_weights(10, 3, rng)
    imp = evolve_implicit(W0, Zs, T=50.0, dt=2.5e-4, record_stride=4000,
                          residual_tol=1e-5)
    assert abs(imp.psis[-1] / 50.0 - 1.0) <= 0.02


def test_comparison_csv_schema(tmp_path):
    W0, Zs = _problem(5)
    imp = evolve_implicit(W0, Zs, T=1.0, dt=1e-3, record_stride=200)
    path = tmp_path / "cmp.csv"
    imp.to_comparison_csv(path, np.zeros_like(imp.times))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,psi,residual,dist_to_flow"
    assert len(lines) == len(imp.times) + 1


def test_input_validation():
    W0, Zs = _problem(6)
    with pytest.raises(ValueError):
        evolve_implicit(W0, Zs, T=-1.0, dt=1e-3)
    with pytest.raises(ValueError):
        evolve_implicit(W0, Zs, T=1.0, dt=0.0)
    other = GramState.from_matrix(np.eye(5))
    with pytest.raises(ValueError):
        evolve_implicit(W0, other, T=1.0, dt=1e-3)
