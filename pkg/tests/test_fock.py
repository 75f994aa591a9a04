import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anyonchain.fock import (
    anyon_annihilation, anyon_creation, annihilation_matrix, creation_matrix,
    enumerate_basis, fock_state, inversion_permutation, number_matrix, sector_dimension,
    string_phase_matrix,
)


def test_softcore_dimension_is_binomial():
    assert sector_dimension(30, 2) == 465
    assert sector_dimension(31, 3) == 5456
    assert sector_dimension(30, 4) == 40920
    assert enumerate_basis(30, 2).dim == math.comb(31, 2)


def test_hardcore_dimension():
    assert sector_dimension(20, 2, cap=1) == math.comb(20, 2)
    assert enumerate_basis(6, 3, cap=1).dim == 20


def test_ordering_is_lexicographic():
    b = enumerate_basis(3, 2)
    assert b.states.tolist()[0] == [0, 0, 2]
    assert b.states.tolist()[-1] == [2, 0, 0]
    keys = [tuple(s) for s in b.states.tolist()]
    assert keys == sorted(keys)


@settings(max_examples=40, deadline=None)
@given(L=st.integers(1, 7), N=st.integers(0, 5), cap=st.integers(1, 5))
def test_rank_round_trip(L, N, cap):
    if N > L * cap:
        return
    b = enumerate_basis(L, N, cap)
    assert b.dim == sector_dimension(L, N, cap)
    np.testing.assert_array_equal(b.index(b.states), np.arange(b.dim))
    assert np.all(b.states.sum(axis=1) == N)
    assert np.all(b.states <= cap)
    assert len({tuple(s) for s in b.states.tolist()}) == b.dim


def test_index_rejects_foreign_states():
    b = enumerate_basis(4, 2)
    with pytest.raises(ValueError):
        b.index([1, 1, 1, 0])
    with pytest.raises(ValueError):
        b.index([1, 1, 0])


def test_empty_sector_raises():
    with pytest.raises(ValueError):
        enumerate_basis(2, 3, cap=1)


def test_boson_ladder_algebra():
    # default caps differ (2 and 1); creation must respect the target's cap
    b2, b1 = enumerate_basis(4, 2), enumerate_basis(4, 1)
    a = annihilation_matrix(b2, 2, b1).toarray()
    ad = creation_matrix(b1, 2, b2).toarray()
    np.testing.assert_allclose(ad, a.conj().T)
    # b^dag b = n on the N sector
    np.testing.assert_allclose(ad @ a, number_matrix(b2, 2).toarray())
    psi = fock_state(b2, [0, 2, 0, 0])
    np.testing.assert_allclose(a @ psi, math.sqrt(2) * fock_state(b1, [0, 1, 0, 0]))


def test_string_phase_counts_left_sites():
    b = enumerate_basis(3, 2)
    d = string_phase_matrix(b, 3, 0.3).diagonal()
    left = b.states[:, :2].sum(axis=1)
    np.testing.assert_allclose(d, np.exp(-0.3j * left))


@pytest.mark.parametrize("theta", [0.0, 0.7, -np.pi / 2, np.pi])
def test_anyon_exchange_relations(theta):
    L = 4
    b3, b2, b1 = (enumerate_basis(L, n, 3) for n in (3, 2, 1))
    top = {j: anyon_annihilation(b3, j, theta, b2).toarray() for j in range(1, L + 1)}
    low = {j: anyon_annihilation(b2, j, theta, b1).toarray() for j in range(1, L + 1)}
    for j in range(1, L + 1):
        for k in range(1, L + 1):
            c = np.exp(1j * theta * np.sign(j - k))
            np.testing.assert_allclose(low[j] @ top[k], c * low[k] @ top[j], atol=1e-13)
            # a_j a_k^dag - conj(c) a_k^dag a_j = delta_jk on the 2-particle sector
            mixed = top[j] @ top[k].conj().T - np.conj(c) * low[k].conj().T @ low[j]
            if j == k:
                continue  # the occupation cap truncates a_j a_j^dag at the top sector
            np.testing.assert_allclose(mixed, 0, atol=1e-13)


def test_anyon_creation_is_adjoint():
    b = enumerate_basis(5, 2)
    up = enumerate_basis(5, 3)
    np.testing.assert_allclose(anyon_creation(b, 3, 0.4, up).toarray(),
                               anyon_annihilation(up, 3, 0.4, b).toarray().conj().T)


def test_inversion_permutation_is_involution():
    b = enumerate_basis(6, 3)
    perm = inversion_permutation(b)
    np.testing.assert_array_equal(perm[perm], np.arange(b.dim))
    np.testing.assert_array_equal(b.states[perm], b.states[:, ::-1])


def test_site_bounds():
    b = enumerate_basis(3, 1)
    with pytest.raises(IndexError):
        annihilation_matrix(b, 0)
    with pytest.raises(IndexError):
        number_matrix(b, 4)
