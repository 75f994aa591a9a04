"""Fixed-particle-number bosonic Fock basis and site-local operators.

Sites are numbered 1..L in every public signature; occupation arrays are
ordinary 0-based numpy arrays, so site ``j`` lives in column ``j - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


def _bounded_counts(L: int, N: int, cap: int) -> np.ndarray:
    """``table[l, n]`` = number of ways to place n bosons on l sites, each <= cap."""
    table = np.zeros((L + 1, N + 1), dtype=np.int64)
    table[0, 0] = 1
    for l in range(1, L + 1):
        for n in range(N + 1):
            table[l, n] = table[l - 1, max(0, n - cap):n + 1].sum()
    return table


@lru_cache(maxsize=None)
def _states(L: int, N: int, cap: int) -> np.ndarray:
    # lexicographic order: first site varies slowest, ascending
    if L == 1:
        if N <= cap:
            return np.array([[N]], dtype=np.int16)
        return np.zeros((0, 1), dtype=np.int16)
    blocks = []
    for v in range(min(cap, N) + 1):
        tail = _states(L - 1, N - v, cap)
        if len(tail) == 0:
            continue
        head = np.full((len(tail), 1), v, dtype=np.int16)
        blocks.append(np.hstack([head, tail]))
    if not blocks:
        return np.zeros((0, L), dtype=np.int16)
    return np.vstack(blocks)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Ordered occupation states of N bosons on L sites with a per-site cap.

    ``states[i]`` is the occupation vector with rank ``i``. Ranking uses a
    bounded-composition counting table, so ``index`` is O(L) per state and
    vectorized over batches.
    """

    L: int
    N: int
    cap: int
    states: np.ndarray = field(repr=False)
    _offsets: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def index(self, occ) -> np.ndarray | int:
        """Rank of one occupation vector or of each row of a 2-D batch."""
        occ = np.asarray(occ, dtype=np.int64)
        single = occ.ndim == 1
        occ = np.atleast_2d(occ)
        if occ.shape[1] != self.L:
            raise ValueError(f"occupation vectors must have length {self.L}")
        if np.any(occ.sum(axis=1) != self.N) or np.any(occ < 0) or np.any(occ > self.cap):
            raise ValueError("occupation vector is outside this sector")
        remaining = self.N - np.cumsum(occ, axis=1) + occ
        rank = np.zeros(len(occ), dtype=np.int64)
        for j in range(self.L):
            rank += self._offsets[j, remaining[:, j], occ[:, j]]
        return int(rank[0]) if single else rank

    def state(self, i: int) -> np.ndarray:
        return self.states[i].astype(np.int64)

    def contains(self, occ) -> np.ndarray:
        """Boolean mask telling which rows of ``occ`` belong to this sector."""
        occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
        return (occ.sum(axis=1) == self.N) & np.all((occ >= 0) & (occ <= self.cap), axis=1)


def enumerate_basis(L: int, N: int, cap: int | None = None) -> FockBasis:
    """Build the sector of N bosons on L sites; ``cap=None`` means softcore (cap = N)."""
    if cap is None:
        cap = max(N, 1)
    if L < 1:
        raise ValueError("need at least one site")
    if cap < 1:
        raise ValueError("occupation cap must be positive")
    if N < 0 or N > L * cap:
        raise ValueError(f"empty sector: N={N} does not fit on L={L} sites with cap={cap}")
    counts = _bounded_counts(L, N, cap)
    # offsets[j, n, v]: number of states preceding value v at site j given n
    # particles still to place on sites j..L-1
    offsets = np.zeros((L, N + 1, cap + 1), dtype=np.int64)
    for j in range(L):
        rest = L - j - 1
        for n in range(N + 1):
            acc = 0
            for v in range(cap + 1):
                offsets[j, n, v] = acc
                if v <= n:
                    acc += counts[rest, n - v]
    states = _states(L, N, cap)
    states.setflags(write=False)
    assert len(states) == counts[L, N]
    return FockBasis(L=L, N=N, cap=cap, states=states, _offsets=offsets)


def sector_dimension(L: int, N: int, cap: int | None = None) -> int:
    """Dimension of a sector without enumerating it."""
    if cap is None:
        cap = max(N, 1)
    if N < 0 or N > L * cap:
        return 0
    return int(_bounded_counts(L, N, cap)[L, N])


def lower_sector(basis: FockBasis) -> FockBasis:
    """The (N-1)-particle sector with the same L and cap."""
    if basis.N == 0:
        raise ValueError("the vacuum has no lower sector")
    return enumerate_basis(basis.L, basis.N - 1, basis.cap)


def _check_site(basis: FockBasis, j: int) -> None:
    if not 1 <= j <= basis.L:
        raise IndexError(f"site {j} outside 1..{basis.L}")


def annihilation_matrix(basis: FockBasis, j: int, target: FockBasis | None = None) -> sp.csr_matrix:
    """b_j as a rectangular (dim_{N-1} x dim_N) sparse matrix."""
    _check_site(basis, j)
    if target is None:
        target = lower_sector(basis)
    occ = basis.states.astype(np.int64)
    cols = np.flatnonzero(occ[:, j - 1] > 0)
    new = occ[cols].copy()
    new[:, j - 1] -= 1
    rows = target.index(new) if len(cols) else np.zeros(0, dtype=np.int64)
    vals = np.sqrt(occ[cols, j - 1]).astype(complex)
    return sp.csr_matrix((vals, (rows, cols)), shape=(target.dim, basis.dim))


def creation_matrix(basis: FockBasis, j: int, target: FockBasis | None = None) -> sp.csr_matrix:
    """b_j^dagger from the N sector of ``basis`` into ``target`` (N+1 sector).

    States that would exceed the occupation cap are dropped, which is the
    capped (hardcore) creation operator.
    """
    _check_site(basis, j)
    if target is None:
        target = enumerate_basis(basis.L, basis.N + 1, basis.cap)
    occ = basis.states.astype(np.int64)
    cols = np.flatnonzero(occ[:, j - 1] < target.cap)
    new = occ[cols].copy()
    new[:, j - 1] += 1
    rows = target.index(new) if len(cols) else np.zeros(0, dtype=np.int64)
    vals = np.sqrt(new[:, j - 1]).astype(complex)
    return sp.csr_matrix((vals, (rows, cols)), shape=(target.dim, basis.dim))


def number_matrix(basis: FockBasis, j: int) -> sp.csr_matrix:
    _check_site(basis, j)
    return sp.diags(basis.states[:, j - 1].astype(complex), format="csr")


def string_phase_matrix(basis: FockBasis, j: int, theta: float) -> sp.csr_matrix:
    """Diagonal Jordan-Wigner string exp(-i theta sum_{k<j} n_k)."""
    _check_site(basis, j)
    left = basis.states[:, : j - 1].sum(axis=1)
    return sp.diags(np.exp(-1j * theta * left), format="csr")


def anyon_annihilation(basis: FockBasis, j: int, theta: float,
                       target: FockBasis | None = None) -> sp.csr_matrix:
    """a_j = b_j exp(-i theta sum_{k<j} n_k), acting on the sector of ``basis``."""
    return (annihilation_matrix(basis, j, target) @ string_phase_matrix(basis, j, theta)).tocsr()


def anyon_creation(basis: FockBasis, j: int, theta: float,
                   target: FockBasis | None = None) -> sp.csr_matrix:
    """a_j^dagger from the sector of ``basis`` into the N+1 sector.

    Built as the conjugate transpose of a_j on the upper sector, so the
    pairing is exact by construction.
    """
    if target is None:
        target = enumerate_basis(basis.L, basis.N + 1, basis.cap)
    return anyon_annihilation(target, j, theta, basis).conj().T.tocsr()


def inversion_permutation(basis: FockBasis) -> np.ndarray:
    """perm[i] = rank of the mirrored state (site j -> L + 1 - j)."""
    return basis.index(basis.states[:, ::-1])


def fock_state(basis: FockBasis, occ) -> np.ndarray:
    """Unit vector for a single occupation pattern."""
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index(np.asarray(occ))] = 1.0
    return psi
