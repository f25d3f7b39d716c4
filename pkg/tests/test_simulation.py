"""Simulation, empirical covariances, the recursive filter, file round trips."""
import numpy as np
import pytest

from lpvssa import (
    AsLpvSsa,
    SchedulingSpec,
    change_basis,
    compare_outputs,
    empirical_psi,
    gen_scheduling,
    innovation_filter,
    load_trajectory_csv,
    psi_y_model_table,
    save_trajectory_csv,
    simulate,
    simulate_system,
)
from lpvssa.benchmarks import alt_scheduling, default_scheduling, load_benchmark
from lpvssa.simulation import Trajectory, noise_base_covariance, predictor_path
from lpvssa.stochastic import associated_dlpv

from conftest import random_stable_aslpv, well_conditioned_matrix


def test_simulation_is_deterministic_per_seed():
    S, spec = load_benchmark(1)
    t1 = simulate_system(S, spec, T=500, scheduling_seed=9, noise_seed=10)
    t2 = simulate_system(S, spec, T=500, scheduling_seed=9, noise_seed=10)
    assert np.array_equal(t1.mu, t2.mu)
    assert np.array_equal(t1.y, t2.y)
    assert np.array_equal(t1.x, t2.x)
    assert np.array_equal(t1.v, t2.v)
    t3 = simulate_system(S, spec, T=500, scheduling_seed=9, noise_seed=11)
    assert not np.array_equal(t3.y, t1.y)


def test_scheduling_families_moments():
    T = 200_000
    uni = gen_scheduling(SchedulingSpec.white_uniform([1.5, 0.6]), T, seed=1)
    assert np.max(np.abs(uni.mu.mean(axis=0))) < 0.01
    assert np.allclose(uni.mu.var(axis=0), [0.75, 0.12], rtol=0.01)

    disc = gen_scheduling(SchedulingSpec.discrete_iid([0.2, 0.5, 0.3]), T, seed=2)
    assert np.allclose(disc.mu.mean(axis=0), [0.2, 0.5, 0.3], atol=0.01)
    assert np.array_equal(disc.mu.sum(axis=1), np.ones(T))

    cpw = gen_scheduling(SchedulingSpec.constant_plus_white([1.5]), T, seed=3)
    assert np.array_equal(cpw.mu[:, 0], np.ones(T))
    assert np.mean(cpw.mu[:, 1] ** 2) == pytest.approx(0.75, rel=0.01)


def test_gen_scheduling_requires_family():
    spec = SchedulingSpec.from_moments([1.0, 0.75])
    with pytest.raises(ValueError):
        gen_scheduling(spec, 100, seed=0)


def test_noise_base_covariance_checks_proportionality():
    S, spec = load_benchmark(1)
    base = noise_base_covariance(S, spec)
    assert base == pytest.approx(np.ones((1, 1)))
    with pytest.raises(ValueError, match="proportional"):
        noise_base_covariance(S, alt_scheduling())


def test_simulate_recursion_matches_manual_loop():
    rng = np.random.default_rng(50)
    S, spec = random_stable_aslpv(rng, n=2, pdim=2, ny=1, m=1)
    spec = SchedulingSpec.white_uniform(np.sqrt(3.0 * np.asarray(spec.p)))
    mu = gen_scheduling(spec, 20, seed=4)
    v = rng.normal(size=(20, 1))
    traj = simulate(S, mu, T=20, spec=spec, v=v)
    x = np.zeros(2)
    for t in range(20):
        assert np.allclose(traj.x[t], x, atol=1e-12)
        expected_y = S.C @ x + S.F @ v[t]
        assert np.allclose(traj.y[t], expected_y, atol=1e-12)
        x = sum(mu.mu[t, i] * (S.A[i] @ x + S.K[i] @ v[t]) for i in range(2))


def test_burn_in_is_a_prefix_drop():
    S, spec = load_benchmark(3)
    mu = gen_scheduling(spec, 1200, seed=5)
    a = simulate(S, mu, noise_seed=6, T=200, burn_in=1000, spec=spec)
    b = simulate(S, mu, noise_seed=6, T=1200, burn_in=0, spec=spec)
    assert np.array_equal(a.y, b.y[1000:])
    assert np.array_equal(a.x, b.x[1000:])


def test_simulate_coverage_and_stability_errors():
    S, spec = load_benchmark(3)
    mu = gen_scheduling(spec, 100, seed=7)
    with pytest.raises(ValueError, match="scheduling trajectory"):
        simulate(S, mu, T=200, spec=spec)
    unstable = AsLpvSsa(A=(2.0 * np.eye(1), 2.0 * np.eye(1)),
                        K=(np.ones((1, 1)),) * 2, C=np.ones((1, 1)),
                        F=np.eye(1), Q=(np.eye(1), 0.75 * np.eye(1)))
    with pytest.raises(ValueError, match="stable"):
        simulate(unstable, mu, T=50, spec=spec)


def test_predictor_path_alignment():
    p = (1.0, 0.75)
    spec = SchedulingSpec.from_moments(p)
    y = np.arange(5.0).reshape(5, 1) + 1.0
    mu = np.arange(10.0).reshape(5, 2)
    traj = Trajectory(mu=mu, y=y, spec=spec)
    z1 = predictor_path(traj, spec, (2,))
    # z(t) = y(t-1) mu_2(t-1) / sqrt(p_2), rows aligned at t = i + 1
    expected = (y[:4] * mu[:4, [1]]) / np.sqrt(0.75)
    assert np.allclose(z1, expected)
    z2 = predictor_path(traj, spec, (1, 2))
    # u_w(t-1) = mu_1(t-2) mu_2(t-1) for w = (1, 2)
    expected = (y[:3] * (mu[:3, [0]] * mu[1:4, [1]])) / np.sqrt(0.75)
    assert np.allclose(z2, expected)
    with pytest.raises(ValueError):
        predictor_path(traj, spec, (3,))
    with pytest.raises(ValueError):
        predictor_path(traj, spec, (1,) * 5)


def test_empirical_psi_converges_to_model():
    S, spec = load_benchmark(3)
    traj = simulate_system(S, spec, T=200_000, scheduling_seed=0, noise_seed=1)
    words = [(1,), (2,), (1, 2), (2, 2)]
    table = psi_y_model_table(S, spec, 2)
    emp = empirical_psi(traj, spec, words)
    for w in words:
        z = np.abs(emp[w].value - table[w]) / emp[w].stderr
        assert float(z.max()) < 4.0


def test_stationary_output_moment_matches_ty():
    S, spec = load_benchmark(3)
    assoc = associated_dlpv(S, spec)
    traj = simulate_system(S, spec, T=300_000, scheduling_seed=2, noise_seed=3)
    for i, ps in enumerate(spec.p):
        emp = float(np.mean(traj.y[:, 0] ** 2 * traj.mu[:, i] ** 2)) / ps
        assert emp == pytest.approx(float(assoc.Ty[i][0, 0]), rel=0.02)


def test_innovation_filter_recovers_state_and_noise():
    S, spec = load_benchmark(3)
    traj = simulate_system(S, spec, T=20_000, scheduling_seed=8, noise_seed=9)
    res = innovation_filter(S, traj, spec)
    drop = 2000
    err_state = np.mean(np.sum((traj.x[drop:] - res.xbar[drop:]) ** 2, axis=1))
    assert err_state < 1e-20
    rel = np.mean((res.err[drop:] - traj.v[drop:]) ** 2) / np.var(traj.v)
    assert rel < 1e-20


def test_innovation_filter_rejects_non_invertable():
    S, spec = load_benchmark(1)
    traj = simulate_system(S, spec, T=100, scheduling_seed=0, noise_seed=0)
    with pytest.raises(ValueError, match="invertab"):
        innovation_filter(S, traj, spec)


def test_compare_outputs_basis_change_noise_floor():
    rng = np.random.default_rng(51)
    S, spec = load_benchmark(3)
    T_basis = well_conditioned_matrix(rng, S.n)
    S2 = change_basis(S, T_basis)
    stats = compare_outputs(S, S2, spec, scheduling_seed=0, noise_seed=1, T=5000)
    assert stats.shared_noise
    assert stats.ratio < 1e-10


def test_compare_outputs_distinguishes_systems():
    S1, spec = load_benchmark(3)
    S3 = AsLpvSsa(A=S1.A, K=tuple(2.0 * K for K in S1.K), C=S1.C, F=S1.F, Q=S1.Q)
    stats = compare_outputs(S1, S3, spec, T=5000)
    assert stats.ratio > 1e-3


def test_compare_outputs_with_pinned_noise_base():
    S, spec = load_benchmark(3)
    base = noise_base_covariance(S, spec)
    stats = compare_outputs(S, S, alt_scheduling(), T=2000, noise_base=base)
    assert stats.mse_diff == 0.0


def test_trajectory_csv_round_trip(tmp_path):
    S, spec = load_benchmark(1)
    traj = simulate_system(S, spec, T=50, scheduling_seed=12, noise_seed=13)
    path = tmp_path / "traj.csv"
    sidecar = save_trajectory_csv(traj, path)
    loaded = load_trajectory_csv(path)
    assert np.array_equal(loaded.mu, traj.mu)
    assert np.array_equal(loaded.y, traj.y)
    assert np.array_equal(loaded.x, traj.x)
    assert np.array_equal(loaded.v, traj.v)
    assert loaded.seed == 12 and loaded.noise_seed == 13
    assert loaded.spec is not None and loaded.spec.p == pytest.approx(spec.p)
    # the CSV alone still loads when the sidecar is gone
    import os
    os.remove(sidecar)
    bare = load_trajectory_csv(path)
    assert np.array_equal(bare.y, traj.y)
    assert bare.spec is None


def test_empirical_psi_requires_outputs():
    spec = SchedulingSpec.from_moments([1.0])
    traj = Trajectory(mu=np.ones((10, 1)), spec=spec)
    with pytest.raises(ValueError, match="output"):
        empirical_psi(traj, spec, [(1,)])
