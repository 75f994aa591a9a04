import numpy as np
import pytest

from anyonchain.dynamics import uniform_center_state
from anyonchain.model import ConditioningWarning, ModelParams, build_hamiltonian
from anyonchain.symmetry import (
    conjugate_pair_check, dynamical_symmetry_residual, inversion_matrix, obc_reality_residual,
    pseudo_hermiticity_residual, rotation_diagonal,
)


@pytest.mark.parametrize("boundary", ["obc", "pbc"])
@pytest.mark.parametrize("theta", [0.0, -np.pi / 2, 0.9])
def test_pseudo_hermiticity(boundary, theta):
    p = ModelParams.with_alpha(7, 3, 0.15, theta=theta, U=2.0, boundary=boundary)
    assert pseudo_hermiticity_residual(p).passed


def test_pseudo_hermiticity_exact_for_hermitian_bosons():
    assert pseudo_hermiticity_residual(ModelParams(L=6, N=2, U=1.0)).residual == 0.0


def test_rotation_and_inversion_building_blocks():
    p = ModelParams(L=4, N=2, theta=0.7)
    d = rotation_diagonal(p)
    doubly = p.basis.states.max(axis=1) == 2
    np.testing.assert_allclose(d[doubly], np.exp(-0.7j))
    np.testing.assert_allclose(d[~doubly], 1.0)
    P = inversion_matrix(p)
    np.testing.assert_allclose((P @ P).toarray(), np.eye(p.basis.dim))


def test_conjugate_pairing():
    assert conjugate_pair_check(np.array([1 + 1j, 1 - 1j, 2.0])).passed
    bad = conjugate_pair_check(np.array([1 + 1j, 2.0]))
    assert not bad.passed and bad.residual > 0.5


@pytest.mark.parametrize("theta", [0.0, np.pi])
def test_periodic_spectrum_pairs_for_bosons_and_pseudofermions(theta):
    p = ModelParams.with_alpha(8, 2, 0.1, theta=theta, U=2.0, boundary="pbc")
    assert conjugate_pair_check(np.linalg.eigvals(build_hamiltonian(p).toarray())).passed


def test_dynamical_symmetry_and_negative_controls():
    p = ModelParams.with_alpha(8, 2, 0.1, theta=-np.pi / 2, U=4.0)
    psi0 = uniform_center_state(p.basis)
    times = np.linspace(0, 2, 5)
    assert dynamical_symmetry_residual(p, psi0, times, "both").passed
    assert dynamical_symmetry_residual(p, psi0, times, "theta").residual > 1e-3
    assert dynamical_symmetry_residual(p, psi0, times, "U").residual > 1e-3
    with pytest.raises(ValueError):
        dynamical_symmetry_residual(p, psi0, times, "alpha")


def test_obc_reality():
    assert obc_reality_residual(ModelParams.with_alpha(10, 2, 0.1, theta=-np.pi / 2, U=4.0)).passed
    with pytest.raises(ValueError):
        obc_reality_residual(ModelParams(L=5, N=1, boundary="pbc"))
    with pytest.warns(ConditioningWarning):
        obc_reality_residual(ModelParams.with_alpha(10, 3, 0.3))
