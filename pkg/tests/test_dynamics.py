import numpy as np
import pytest
import scipy.linalg as sla

from anyonchain.dynamics import (
    central_sites, decreasing_intervals, density_correlation, density_series, densities,
    evolve_samples, imbalance, occupation_state, propagate, reversed_interval, time_grid,
    transition_asymmetry, uniform_center_state,
)
from anyonchain.model import ModelParams, build_hamiltonian


def test_central_sites():
    assert central_sites(30, 2) == [15, 16]
    assert central_sites(30, 4) == [14, 15, 16, 17]
    with pytest.raises(ValueError):
        central_sites(31, 2)
    assert central_sites(31, 3, offset=14) == [15, 16, 17]


def test_initial_state_density():
    p = ModelParams(L=10, N=2)
    n = densities(uniform_center_state(p.basis), p.basis)
    np.testing.assert_allclose(n, [0, 0, 0, 0, 1, 1, 0, 0, 0, 0])
    n = densities(occupation_state(p.basis, {5: 2}), p.basis)
    assert n[4] == 2


def test_dense_and_krylov_agree():
    p = ModelParams.with_alpha(10, 2, 0.1, theta=-np.pi / 2, U=4.0)
    H = build_hamiltonian(p)
    psi0 = uniform_center_state(p.basis)
    a = propagate(H, psi0, 2.5, "dense")
    b = propagate(H, psi0, 2.5, "krylov")
    assert np.linalg.norm(a.amplitudes - b.amplitudes) < 1e-9
    assert a.log_norm == pytest.approx(b.log_norm, abs=1e-9)


def test_samples_match_direct_exponential():
    p = ModelParams.with_alpha(6, 2, 0.3, theta=0.7, U=1.0)
    H = build_hamiltonian(p)
    psi0 = uniform_center_state(p.basis)
    times = time_grid(1.0, 0.25)
    out = evolve_samples(H, psi0, times, "dense")
    w = sla.expm(-1j * H.toarray()) @ psi0
    np.testing.assert_allclose(out[-1], w / np.linalg.norm(w), atol=1e-12)


def test_hermitian_density_is_mirror_symmetric():
    p = ModelParams(L=10, N=2, U=3.0)
    s = density_series(p, uniform_center_state(p.basis), t_max=2.0, dt=0.1)
    np.testing.assert_allclose(s.density, s.density[:, ::-1], atol=1e-12)
    np.testing.assert_allclose(imbalance(s), 0, atol=1e-12)
    np.testing.assert_allclose(s.density.sum(axis=1), 2, atol=1e-12)


def test_nhse_pumps_right():
    p = ModelParams.with_alpha(10, 1, 0.3)
    s = density_series(p, occupation_state(p.basis, {5: 1}), t_max=4.0, dt=0.1)
    dN = imbalance(s)
    assert dN[-1] > 0.5
    assert np.all(np.diff(dN[:15]) > 0)


def test_odd_chain_imbalance_needs_exclusion():
    n = np.ones((2, 5))
    with pytest.raises(ValueError):
        imbalance(n)
    np.testing.assert_allclose(imbalance(n, exclude_center=True), 0)


def test_decreasing_intervals():
    t = time_grid(4.0, 0.5)
    dN = np.array([0, 1, 2, 1, 0, 1, 2, 3, 4], dtype=float)
    runs = decreasing_intervals(t, dN, 1e-4)
    # centered slopes: only the sample at t = 1.5 is strictly decreasing
    assert [(a, b) for a, b, _ in runs] == [(1.5, 1.5)]
    assert reversed_interval(t, dN, slope_eps=1e-4) == pytest.approx(0.5)
    assert reversed_interval(t, -dN, slope_eps=1e-4, mode="max") == pytest.approx(2.0)
    with pytest.raises(ValueError):
        decreasing_intervals(np.array([0, 1, 3.0]), dN[:3], 1e-4)


def test_density_correlation_of_fock_state():
    p = ModelParams(L=6, N=2)
    G = density_correlation(occupation_state(p.basis, {4: 1, 5: 1}), p.basis)
    assert G[3, 4] == G[4, 3] == 1
    assert G[3, 3] == 1
    assert G.sum() == pytest.approx(4)
    mask = np.ones_like(G, dtype=bool)
    mask[3:5, 3:5] = False
    assert np.all(G[mask] == 0)


def test_correlation_sum_rule():
    p = ModelParams.with_alpha(8, 2, 0.1, theta=-np.pi / 2, U=4.0)
    s = density_series(p, uniform_center_state(p.basis), t_max=2.0, dt=0.5, keep_states=True)
    for psi in s.states:
        G = density_correlation(psi, p.basis)
        assert G.sum() == pytest.approx(4)
        np.testing.assert_allclose(G, G.T, atol=1e-14)


@pytest.mark.parametrize("theta", [0.0, np.pi])
def test_transition_symmetry_for_bosons_and_pseudofermions(theta):
    p = ModelParams(L=6, N=2, theta=theta, U=4.0)
    H = build_hamiltonian(p)
    psi0 = occupation_state(p.basis, {3: 1, 4: 1})
    psi1 = occupation_state(p.basis, {1: 1, 3: 1})
    a, b = transition_asymmetry(psi0, psi1, H, 1.0, p.basis)
    assert abs(a - b) < 1e-10


def test_transition_asymmetry_for_anyons():
    p = ModelParams(L=6, N=2, theta=-np.pi / 2, U=4.0)
    H = build_hamiltonian(p)
    psi0 = occupation_state(p.basis, {3: 1, 4: 1})
    psi1 = occupation_state(p.basis, {1: 1, 3: 1})
    a, b = transition_asymmetry(psi0, psi1, H, 1.0, p.basis)
    assert abs(a - b) > 1e-3


def test_transition_asymmetry_requires_symmetric_source():
    p = ModelParams(L=4, N=2, theta=-np.pi / 2, U=1.0)
    H = build_hamiltonian(p)
    psi_sym = occupation_state(p.basis, {2: 1, 3: 1})
    psi1 = occupation_state(p.basis, {1: 1, 3: 1})
    with pytest.raises(ValueError):
        transition_asymmetry(psi1, psi_sym, H, 0.05, p.basis)
