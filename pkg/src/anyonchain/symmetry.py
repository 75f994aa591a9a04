"""Numerical checks of the symmetry identities of the chain."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from .dynamics import densities, evolve_samples
from .fock import inversion_permutation
from .model import OPEN, ConditioningWarning, ModelParams, build_hamiltonian
from .spectra import Spectrum, eigendecompose


@dataclass(frozen=True)
class SymmetryReport:
    name: str
    residual: float
    tolerance: float
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)


def _max_abs(A) -> float:
    if sp.issparse(A):
        A = A.tocsr()
        return float(abs(A).max()) if A.nnz else 0.0
    return float(np.abs(A).max()) if A.size else 0.0


def rotation_diagonal(params: ModelParams) -> np.ndarray:
    """Diagonal of R_z = exp(-i theta sum_j n_j (n_j - 1) / 2)."""
    occ = params.basis.states.astype(np.int64)
    return np.exp(-0.5j * params.theta * (occ * (occ - 1)).sum(axis=1))


def inversion_matrix(params: ModelParams) -> sp.csr_matrix:
    """Permutation matrix of site inversion j -> L + 1 - j."""
    perm = inversion_permutation(params.basis)
    dim = params.basis.dim
    return sp.csr_matrix((np.ones(dim, dtype=complex), (perm, np.arange(dim))), shape=(dim, dim))


def pseudo_hermiticity_residual(params: ModelParams, H=None, tol: float = 1e-12) -> SymmetryReport:
    """max |K conj(H) K^dag - H^dag| with K = R_z I the unitary part of R_z I T.

    Complex conjugation T acts on the operand, which is why H enters conjugated.
    """
    if H is None:
        H = build_hamiltonian(params)
    K = (sp.diags(rotation_diagonal(params)) @ inversion_matrix(params)).tocsr()
    lhs = K @ H.conj() @ K.conj().T
    residual = _max_abs(lhs - H.conj().T)
    return SymmetryReport("pseudo_hermiticity", residual, tol, params.to_dict())


def conjugate_pair_check(spec: Spectrum | np.ndarray, tol: float = 1e-8) -> SymmetryReport:
    """Optimal one-to-one matching of the eigenvalues with their complex conjugates."""
    values = spec.values if isinstance(spec, Spectrum) else np.asarray(spec)
    D = np.abs(values[:, None] - values.conj()[None, :])
    rows, cols = linear_sum_assignment(D)
    residual = float(D[rows, cols].max()) if len(values) else 0.0
    return SymmetryReport("conjugate_pairing", residual, tol)


def dynamical_symmetry_residual(params: ModelParams, psi0, times, flip: str = "both",
                                tol: float = 1e-10, method: str = "auto") -> SymmetryReport:
    """max over (j, t) of |n_j(t)| differences between params and its mirrored partner.

    ``flip="both"`` compares (theta, U) against (-theta, -U); "theta" and "U"
    flip a single sign and serve as negative controls.
    """
    changes = {"both": dict(theta=-params.theta, U=-params.U),
               "theta": dict(theta=-params.theta),
               "U": dict(U=-params.U)}
    if flip not in changes:
        raise ValueError(f"flip must be one of {sorted(changes)}")
    other = params.replace(**changes[flip])
    times = np.asarray(times, dtype=float)
    na = densities(evolve_samples(build_hamiltonian(params), psi0, times, method), params.basis)
    nb = densities(evolve_samples(build_hamiltonian(other), psi0, times, method), other.basis)
    residual = float(np.abs(na - nb).max())
    return SymmetryReport(f"dynamical_symmetry[{flip}]", residual, tol, params.to_dict())


def obc_reality_residual(params: ModelParams, tol: float = 1e-6,
                         threshold: float = 8.0) -> SymmetryReport:
    """max |Im E| of the open-chain spectrum."""
    if params.boundary != OPEN:
        raise ValueError("spectral reality is only guaranteed for open chains")
    if abs(params.alpha) * params.L * params.N > threshold:
        warnings.warn(f"alpha*L*N = {abs(params.alpha) * params.L * params.N:.3g} exceeds "
                      f"{threshold}; eigenvalues may pick up spurious imaginary parts",
                      ConditioningWarning, stacklevel=2)
    spec = eigendecompose(build_hamiltonian(params))
    return SymmetryReport("obc_reality", float(np.abs(spec.values.imag).max()), tol,
                          params.to_dict())
