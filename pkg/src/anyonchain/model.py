"""Bosonic (Jordan-Wigner mapped) Hamiltonian of the non-Hermitian anyon-Hubbard chain."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis, enumerate_basis

OPEN = "open"
PERIODIC = "periodic"

_BOUNDARY_ALIASES = {"open": OPEN, "obc": OPEN, "periodic": PERIODIC, "pbc": PERIODIC}


class ConditioningWarning(UserWarning):
    """The gauge transform spans too many orders of magnitude to be trusted."""


@dataclass(frozen=True)
class ModelParams:
    """Physical and boundary parameters of one chain.

    Hoppings are stored explicitly; use :meth:`with_alpha` for the
    ``J_L = exp(-alpha), J_R = exp(alpha)`` parametrization.
    """

    L: int
    N: int
    J_L: float = 1.0
    J_R: float = 1.0
    theta: float = 0.0
    U: float = 0.0
    boundary: str = OPEN
    phi: float = 0.0
    cap: int | None = None

    def __post_init__(self):
        b = _BOUNDARY_ALIASES.get(str(self.boundary).lower())
        if b is None:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        object.__setattr__(self, "boundary", b)
        if self.cap is None:
            object.__setattr__(self, "cap", max(self.N, 1))
        if self.L < 1 or self.N < 0:
            raise ValueError("L must be positive and N non-negative")
        if self.J_L < 0 or self.J_R < 0:
            raise ValueError("hopping amplitudes must be non-negative")
        if b == OPEN and self.phi != 0:
            raise ValueError("a boundary twist requires periodic boundary conditions")

    @classmethod
    def with_alpha(cls, L: int, N: int, alpha: float, **kw) -> "ModelParams":
        return cls(L=L, N=N, J_L=math.exp(-alpha), J_R=math.exp(alpha), **kw)

    @property
    def alpha(self) -> float:
        """Effective non-reciprocity 0.5 ln(J_R / J_L)."""
        return 0.5 * math.log(self.J_R / self.J_L)

    @property
    def hardcore(self) -> bool:
        return self.cap == 1

    def replace(self, **changes) -> "ModelParams":
        if changes.get("boundary", self.boundary) in ("open", "obc") and "phi" not in changes:
            changes["phi"] = 0.0
        return replace(self, **changes)

    @cached_property
    def basis(self) -> FockBasis:
        return enumerate_basis(self.L, self.N, self.cap)

    def to_dict(self) -> dict:
        return {
            "L": self.L, "N": self.N, "J_L": self.J_L, "J_R": self.J_R,
            "theta": self.theta, "U": self.U, "boundary": self.boundary,
            "phi": self.phi, "cap": self.cap,
        }


def _hop_triplets(occ, src, dst, amp, phase_site, phase_shift, theta, basis):
    """Triplets for amp * b_dst^dag exp(i*theta*n_phase) b_src.

    ``phase_shift`` is the change of n on ``phase_site`` already made by the
    annihilation when the phase factor is evaluated (operator order of the
    Hamiltonian read right to left).
    """
    cap = basis.cap
    ok = (occ[:, src] > 0) & (occ[:, dst] < cap)
    cols = np.flatnonzero(ok)
    if not len(cols):
        return cols, cols, np.zeros(0, dtype=complex)
    before = occ[cols]
    new = before.copy()
    new[:, src] -= 1
    new[:, dst] += 1
    rows = basis.index(new)
    n_phase = before[:, phase_site] + phase_shift
    vals = amp * np.sqrt(before[:, src] * (before[:, dst] + 1.0)) * np.exp(1j * theta * n_phase)
    return rows, cols, vals


def build_hamiltonian(params: ModelParams, basis: FockBasis | None = None,
                      phi: float | None = None) -> sp.csr_matrix:
    """H_B in the fixed-N sector as a complex CSR matrix.

    Bond (j, j+1) contributes
    ``-J_L b_j^dag e^{-i theta n_j} b_{j+1} - J_R b_{j+1}^dag e^{i theta n_j} b_j``;
    the periodic bond (L, 1) uses the same rule with j = L and carries
    ``e^{+i phi}`` on the J_L term and ``e^{-i phi}`` on the J_R term.
    """
    if basis is None:
        basis = params.basis
    if phi is None:
        phi = params.phi
    L = params.L
    if params.boundary == PERIODIC and L < 3:
        raise ValueError("periodic chains need L >= 3")
    occ = basis.states.astype(np.int64)
    rows, cols, vals = [], [], []
    diag = 0.5 * params.U * (occ * (occ - 1)).sum(axis=1).astype(complex)
    rows.append(np.arange(basis.dim))
    cols.append(np.arange(basis.dim))
    vals.append(diag)

    bonds = [(j, j + 1, 1.0 + 0j) for j in range(L - 1)]
    if params.boundary == PERIODIC:
        bonds.append((L - 1, 0, np.exp(1j * phi)))
    for left, right, twist in bonds:
        # leftward hop right -> left; phase reads n_left, untouched by b_right
        r, c, v = _hop_triplets(occ, right, left, -params.J_L * twist, left, 0, -params.theta, basis)
        rows.append(r); cols.append(c); vals.append(v)
        # rightward hop left -> right; phase reads n_left after b_left acted
        r, c, v = _hop_triplets(occ, left, right, -params.J_R * np.conj(twist), left, -1,
                                params.theta, basis)
        rows.append(r); cols.append(c); vals.append(v)

    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    H.sum_duplicates()
    H.eliminate_zeros()
    return H


def gauge_similarity(params: ModelParams, basis: FockBasis | None = None,
                     threshold: float = 8.0) -> sp.csr_matrix:
    """Diagonal S with S H_B S^-1 Hermitian under open boundaries.

    Entry for state s is exp(-alpha * sum_l l * occ_l) with sites l = 1..L.
    """
    if params.boundary != OPEN:
        raise ValueError("the gauge similarity is exact only for open boundaries")
    if basis is None:
        basis = params.basis
    alpha = params.alpha
    if abs(alpha) * params.L * params.N > threshold:
        warnings.warn(
            f"alpha*L*N = {abs(alpha) * params.L * params.N:.3g} exceeds {threshold}; "
            "similarity entries are badly scaled", ConditioningWarning, stacklevel=2)
    position = basis.states @ np.arange(1, params.L + 1)
    return sp.diags(np.exp(-alpha * position).astype(complex), format="csr")


def hermitized(params: ModelParams, basis: FockBasis | None = None, tol: float = 1e-10,
               threshold: float = 8.0) -> sp.csr_matrix:
    """S H_B S^-1 for open boundaries, checked to be Hermitian."""
    if basis is None:
        basis = params.basis
    S = gauge_similarity(params, basis, threshold=threshold)
    H = build_hamiltonian(params, basis)
    s = S.diagonal()
    Hp = (sp.diags(s) @ H @ sp.diags(1.0 / s)).tocsr()
    dev = abs(Hp - Hp.conj().T)
    if dev.nnz and dev.max() > tol * max(1.0, abs(Hp).max()):
        raise ArithmeticError(f"similarity-transformed Hamiltonian not Hermitian (dev {dev.max():.3g})")
    return Hp
