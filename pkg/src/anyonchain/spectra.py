"""Non-normal eigendecomposition, skin profiles and the two-particle bound band."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fock import FockBasis
from .model import PERIODIC, ModelParams


class NoSeparatedCluster(ValueError):
    pass


class DefectiveSpectrumWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray | None = None
    residual: float = 0.0

    def __len__(self):
        return len(self.values)


def _dense(H) -> np.ndarray:
    return H.toarray() if sp.issparse(H) else np.asarray(H, dtype=complex)


def eigendecompose(H, want_left: bool = False, tol: float = 1e-9,
                   max_dim: int = 20000) -> Spectrum:
    """Full eigensystem of a (generally non-normal) matrix.

    Eigenpairs are sorted by real then imaginary part. Right vectors have
    unit 2-norm; left vectors, when requested, are scaled so that
    ``left[:, i].conj() @ right[:, i] == 1``.
    """
    if H.shape[0] > max_dim:
        raise MemoryError(f"dimension {H.shape[0]} exceeds the dense limit {max_dim}")
    A = _dense(H)
    try:
        if want_left:
            w, vl, vr = sla.eig(A, left=True, right=True)
        else:
            w, vr = sla.eig(A)
            vl = None
    except sla.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver did not converge: {exc}") from exc
    order = np.lexsort((w.imag.round(12), w.real.round(12)))
    w, vr = w[order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    if vl is not None:
        vl = vl[:, order]
        overlap = np.einsum("ij,ij->j", vl.conj(), vr)
        vl = vl / overlap.conj()
    scale = max(np.abs(A).max(), 1.0)
    residual = float(np.linalg.norm(A @ vr - vr * w, axis=0).max()) if len(w) else 0.0
    if residual > tol * scale:
        warnings.warn(f"eigen-residual {residual:.3g} above {tol * scale:.3g}: "
                      "near-defective cluster", DefectiveSpectrumWarning, stacklevel=2)
    return Spectrum(values=w, right_vectors=vr, left_vectors=vl, residual=residual)


@dataclass(frozen=True)
class DensityProfile:
    per_state: np.ndarray  # rows = eigenstates, columns = sites 1..L
    average: np.ndarray


def density_profiles(spec: Spectrum, basis: FockBasis) -> DensityProfile:
    """Per-particle density rho_i(x) of every right eigenvector, and their mean."""
    prob = np.abs(spec.right_vectors) ** 2
    prob = prob / prob.sum(axis=0)
    per_state = (prob.T @ basis.states) / basis.N
    return DensityProfile(per_state=per_state, average=per_state.mean(axis=0))


def bound_state_loop(spec: Spectrum, U: float, ratio: float = 3.0,
                     center: complex | None = None) -> np.ndarray:
    """Indices of the interaction-bound cluster around E ~ U.

    Distances |lambda - center| are sorted and the largest consecutive gap is
    compared with the second largest; the cluster is declared separated when
    the ratio exceeds ``ratio``.
    """
    if center is None:
        center = U
    if len(spec.values) < 3:
        raise NoSeparatedCluster("spectrum too small for gap detection")
    dist = np.abs(spec.values - center)
    order = np.argsort(dist, kind="stable")
    gaps = np.diff(dist[order])
    ranked = np.argsort(gaps)[::-1]
    first, second = gaps[ranked[0]], gaps[ranked[1]]
    if second <= 0 or first / second <= ratio:
        got = first / second if second > 0 else np.inf
        raise NoSeparatedCluster(f"no separated cluster near {center}: gap ratio {got:.3g} <= {ratio}")
    return np.sort(order[: ranked[0] + 1])


def effective_bound_hamiltonian(params: ModelParams, boundary: str | None = None) -> np.ndarray:
    """Second-order doublon Hamiltonian in the basis |2_l>, l = 1..L.

    Diagonal U + 4 J_L J_R / U; |2_{l-1}><2_l| carries 2 J_L^2 e^{-i theta}/U and
    |2_{l+1}><2_l| carries 2 J_R^2 e^{i theta}/U. Periodic chains wrap the
    hops around; open chains keep the uniform diagonal.
    """
    if params.N != 2:
        raise ValueError("the doublon Hamiltonian is defined for N = 2")
    if params.U == 0:
        raise ValueError("U must be nonzero")
    if boundary is None:
        boundary = params.boundary
    L, U, th = params.L, params.U, params.theta
    left = 2 * params.J_L ** 2 * np.exp(-1j * th) / U
    right = 2 * params.J_R ** 2 * np.exp(1j * th) / U
    H = np.diag(np.full(L, U + 4 * params.J_L * params.J_R / U, dtype=complex))
    idx = np.arange(L - 1)
    H[idx, idx + 1] = left
    H[idx + 1, idx] = right
    if boundary in (PERIODIC, "pbc"):
        H[L - 1, 0] += left
        H[0, L - 1] += right
    return H


def effective_dispersion(k, params: ModelParams):
    """Doublon band U + 4J_LJ_R/U + (2J_L^2/U) e^{i(k-theta)} + (2J_R^2/U) e^{-i(k-theta)}."""
    if params.U == 0:
        raise ValueError("U must be nonzero")
    U, q = params.U, np.asarray(k) - params.theta
    return (U + 4 * params.J_L * params.J_R / U
            + 2 * params.J_L ** 2 / U * np.exp(1j * q)
            + 2 * params.J_R ** 2 / U * np.exp(-1j * q))


def hausdorff_distance(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))
