import numpy as np
import pytest
import scipy.linalg as sla

from anyonchain.dynamics import occupation_state, time_grid
from anyonchain.model import ModelParams, build_hamiltonian
from anyonchain.otoc import (
    CONVENTIONS, ENSEMBLES, OtocGrid, exchange_phase, heisenberg_operator, normalize_grid,
    spreading_asymmetry, state_otoc, thermal_density_matrix, thermal_otoc,
)

TIMES = time_grid(2.0, 0.5)


@pytest.mark.parametrize("convention", CONVENTIONS)
@pytest.mark.parametrize("ensemble", ENSEMBLES)
def test_commutator_vanishes_at_zero_time(convention, ensemble):
    p = ModelParams(L=5, N=3, J_L=1.0, J_R=1.25, theta=-np.pi / 2, U=4.0)
    g = thermal_otoc(p, 1 / 6, 3, [0.0, 0.5], convention=convention, ensemble=ensemble)
    assert np.abs(g.C[:, 0]).max() < 1e-10
    assert np.abs(g.C[:, 1]).max() > 1e-3


def test_hermitian_boson_commutator_is_nonnegative():
    p = ModelParams(L=5, N=3, U=2.0)
    g = thermal_otoc(p, 0.5, 3, TIMES)
    assert g.C.min() > -1e-12


def test_conventions_coincide_for_hermitian_chain():
    p = ModelParams(L=5, N=3, theta=0.6, U=2.0)
    grids = [thermal_otoc(p, 0.3, 2, TIMES, convention=c, ensemble=e)
             for c in CONVENTIONS for e in ENSEMBLES]
    for g in grids[1:]:
        np.testing.assert_allclose(g.F, grids[0].F, atol=1e-10)
        np.testing.assert_allclose(g.C, grids[0].C, atol=1e-10)


def test_right_eigen_ensemble_reduces_to_single_eigenstate():
    # deep in the low-temperature limit the ensemble is the ground right eigenvector
    p = ModelParams(L=2, N=2, J_L=0.8, J_R=1.2, theta=-np.pi / 2, U=1.0)
    H = build_hamiltonian(p).toarray()
    w, R = sla.eig(H)
    ground = R[:, np.argmin(w.real)]
    thermal = thermal_otoc(p, 80.0, 1, TIMES, with_commutator=False)
    single = state_otoc(p, ground, 1, TIMES)
    np.testing.assert_allclose(thermal.F, single.F, atol=1e-10)


def test_thermal_density_matrix_normalized():
    H = build_hamiltonian(ModelParams.with_alpha(5, 2, 0.2, theta=1.0, U=3.0))
    for ens in ENSEMBLES:
        assert np.trace(thermal_density_matrix(H, 0.7, ens)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        thermal_density_matrix(H, 0.7, "microcanonical")


def test_similarity_picture_follows_hermitian_chain():
    # open-chain gauge: the single-state OTOC ignores J_L != J_R up to sqrt(J_L J_R)
    occ = {2: 1, 3: 1, 4: 1}
    p = ModelParams(L=5, N=3, J_L=0.8, J_R=1.25, theta=-np.pi / 2, U=4.0)
    q = ModelParams(L=5, N=3, theta=-np.pi / 2, U=4.0)
    a = state_otoc(p, occupation_state(p.basis, occ), 3, TIMES, convention="similarity")
    b = state_otoc(q, occupation_state(q.basis, occ), 3, TIMES)
    np.testing.assert_allclose(a.F, b.F, atol=1e-10)


def test_state_otoc_conventions_agree_for_hermitian_chain():
    p = ModelParams(L=5, N=3, theta=0.8, U=1.0)
    psi = occupation_state(p.basis, {2: 1, 3: 1, 4: 1})
    ref = state_otoc(p, psi, 3, TIMES, convention="similarity")
    for c in ("adjoint", "inverse"):
        np.testing.assert_allclose(state_otoc(p, psi, 3, TIMES, convention=c).F, ref.F, atol=1e-10)


@pytest.mark.parametrize("ensemble", ENSEMBLES)
def test_mirror_antisymmetry_of_spreading(ensemble):
    p = ModelParams(L=5, N=3, J_L=1.0, J_R=1.25, theta=-np.pi / 2, U=4.0)
    q = ModelParams(L=5, N=3, J_L=1.25, J_R=1.0, theta=np.pi / 2, U=4.0)
    a = spreading_asymmetry(thermal_otoc(p, 1 / 6, 3, TIMES, ensemble=ensemble))
    b = spreading_asymmetry(thermal_otoc(q, 1 / 6, 3, TIMES, ensemble=ensemble))
    assert a == pytest.approx(-b, abs=1e-12)


def test_heisenberg_operator():
    p = ModelParams.with_alpha(4, 1, 0.2)
    H = build_hamiltonian(p).toarray()
    O = np.diag(np.arange(4.0))
    np.testing.assert_allclose(heisenberg_operator(H, O, 0.0), O)
    adj = heisenberg_operator(H, O, 0.7, convention="adjoint")
    np.testing.assert_allclose(adj, sla.expm(0.7j * H.conj().T) @ O @ sla.expm(-0.7j * H))
    sim = heisenberg_operator(H, O, 0.7)
    np.testing.assert_allclose(sim, sla.expm(0.7j * H) @ O @ sla.expm(-0.7j * H))
    with pytest.raises(ValueError):
        heisenberg_operator(H, np.eye(3), 0.5)
    with pytest.raises(ValueError):
        heisenberg_operator(H, O, 0.5, convention="retarded")


def test_exchange_phase():
    assert exchange_phase(0.3, 2, 2) == 1
    assert exchange_phase(0.3, 3, 1) == pytest.approx(np.exp(0.3j))
    assert exchange_phase(0.3, 1, 3) == pytest.approx(np.exp(-0.3j))


def test_normalization_schemes():
    F = np.array([[1.0, 2.0], [0.5, 4.0]], dtype=complex)
    g = OtocGrid(times=np.array([0.0, 1.0]), k=1, sites=np.array([1, 2]), F=F)
    h = normalize_grid(g, "heatmap")
    assert h.abs_F.max() == pytest.approx(1.0)
    assert h.normalization["divisor"] == 4.0
    line = normalize_grid(g, "line")
    np.testing.assert_allclose(line.abs_F.max(axis=1), 1.0)
    with pytest.raises(ValueError):
        normalize_grid(g, "log")
    with pytest.raises(ValueError):
        normalize_grid(OtocGrid(g.times, 1, g.sites, np.zeros((2, 2))), "heatmap")


def test_spreading_asymmetry_sign():
    sites = np.array([1, 2, 3])
    right = OtocGrid(np.array([0.0]), 2, sites, np.array([[0.0], [1.0], [3.0]]))
    assert spreading_asymmetry(right) == pytest.approx(0.75)
    left = OtocGrid(np.array([0.0]), 2, sites, np.array([[3.0], [1.0], [0.0]]))
    assert spreading_asymmetry(left) == pytest.approx(-0.75)


def test_needs_two_particles():
    with pytest.raises(ValueError):
        thermal_otoc(ModelParams(L=4, N=1), 0.1, 2, TIMES)


def _rk4_heisenberg(H, O, t, convention, steps=400):
    # dO/dt = i (A O - O H) with A = H^dag (adjoint) or H (similarity)
    A = H.conj().T if convention == "adjoint" else H
    h = t / steps
    f = lambda X: 1j * (A @ X - X @ H)
    X = O.astype(complex)
    for _ in range(steps):
        k1 = f(X)
        k2 = f(X + 0.5 * h * k1)
        k3 = f(X + 0.5 * h * k2)
        k4 = f(X + h * k3)
        X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return X


@pytest.mark.parametrize("convention", ["adjoint", "similarity"])
def test_heisenberg_operator_matches_equation_of_motion(convention, rng):
    p = ModelParams.with_alpha(3, 2, 0.3, theta=0.8, U=1.5)
    H = build_hamiltonian(p).toarray()
    O = rng.normal(size=H.shape) + 1j * rng.normal(size=H.shape)
    np.testing.assert_allclose(heisenberg_operator(H, O, 1.3, convention=convention),
                               _rk4_heisenberg(H, O, 1.3, convention), atol=1e-7)


def test_conserved_operator_is_static():
    p = ModelParams(L=4, N=2, theta=0.5, U=2.0)
    H = build_hamiltonian(p).toarray()
    np.testing.assert_allclose(heisenberg_operator(H, H @ H, 2.0), H @ H, atol=1e-10)


def test_thermal_bosons_lean_right_at_weak_non_hermiticity():
    p = ModelParams(L=7, N=4, J_L=1.0, J_R=1.02, theta=0.0, U=4.0)
    g = thermal_otoc(p, 1 / 6, 4, time_grid(10.0, 0.25), with_commutator=False)
    assert spreading_asymmetry(g) > 0


def test_state_otoc_occupied_and_empty_sites():
    p = ModelParams(L=11, N=5, J_L=1.0, J_R=1.25, theta=-np.pi / 2, U=4.0)
    psi0 = occupation_state(p.basis, {j: 1 for j in range(4, 9)})
    F = normalize_grid(state_otoc(p, psi0, 6, time_grid(2.0, 0.1), sites=[1, 4, 8, 11]), "line").abs_F
    for row in (F[0], F[3]):  # empty ends grow from zero
        assert row[0] < 1e-12 and np.all(np.diff(row) >= -1e-12)
    for row in (F[1], F[2]):  # occupied sites start at the maximum and decay
        assert row[0] == pytest.approx(1.0) and row[-1] < 0.5
