"""Out-of-time-ordered correlators of the anyonic chain in the bosonic picture.

H is block diagonal in particle number, so a sector-changing block of an
operator is evolved with the Hamiltonian of its target sector on the left and
of its source sector on the right. Three Heisenberg pictures are available:

``similarity`` (default)
    O(t) = exp(iHt) O exp(-iHt) for a_j and a_j^dag alike. Under open
    boundaries H = S^-1 H_h S with S diagonal, so expectation values in Fock
    states reduce to those of the Hermitian chain H_h.
``adjoint``
    a_j(t) = exp(iH^dag t) a_j exp(-iHt), the picture behind
    <psi(t)|n|psi(t)>, with a_j^dag(t) its matrix adjoint.
``inverse``
    a_j(t) = exp(iHt) a_j exp(-iHt) with a_j^dag(t) its matrix adjoint.

Thermal averages either weight normalized right eigenvectors by e^{-beta E_n}
(``ensemble="right_eigen"``, default) or use Tr(e^{-beta H} O) / Tr(e^{-beta H})
(``ensemble="trace"``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .fock import anyon_annihilation, enumerate_basis
from .model import ModelParams, build_hamiltonian

CONVENTIONS = ("similarity", "adjoint", "inverse")
ENSEMBLES = ("right_eigen", "trace")


class ThermalConditioningWarning(UserWarning):
    pass


def _dense(A) -> np.ndarray:
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=complex)


def heisenberg_operator(H, O, t: float, H_source=None, convention: str = "similarity") -> np.ndarray:
    """O(t) for a block O mapping the sector of ``H_source`` into the sector of ``H``.

    With ``H_source=None`` the operator is taken to act within one sector.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    Ht = _dense(H)
    Hs = Ht if H_source is None else _dense(H_source)
    O = _dense(O)
    if O.shape != (Ht.shape[0], Hs.shape[0]):
        raise ValueError(f"operator shape {O.shape} does not match sectors "
                         f"({Ht.shape[0]}, {Hs.shape[0]})")
    if t == 0:
        return O.copy()
    # a single block: "inverse" and "similarity" only differ for daggered operators
    left = sla.expm(1j * t * (Ht.conj().T if convention == "adjoint" else Ht))
    return left @ O @ sla.expm(-1j * t * Hs)


@dataclass
class OtocGrid:
    times: np.ndarray
    k: int
    sites: np.ndarray  # 1-based j values, one row of ``F`` per entry
    F: np.ndarray  # complex, shape (len(sites), len(times))
    C: np.ndarray | None = None
    normalization: dict = field(default_factory=dict)

    @property
    def abs_F(self) -> np.ndarray:
        return np.abs(self.F)


def normalize_grid(grid: OtocGrid, scheme: str = "heatmap") -> OtocGrid:
    """Rescale |F| to a maximum of 1 over (j, t) ("heatmap") or over t per j ("line")."""
    a = grid.abs_F
    if scheme == "heatmap":
        div = a.max()
        if div == 0:
            raise ValueError("cannot normalize an all-zero grid")
        F = grid.F / div
        record = {"scheme": scheme, "divisor": float(div)}
    elif scheme == "line":
        div = a.max(axis=1)
        if np.any(div == 0):
            raise ValueError("cannot normalize a row that is identically zero")
        F = grid.F / div[:, None]
        record = {"scheme": scheme, "divisor": div.tolist()}
    else:
        raise ValueError(f"unknown normalization scheme {scheme!r}")
    return replace(grid, F=F, normalization=record)


def spreading_asymmetry(grid: OtocGrid) -> float:
    """First moment of |F| over j relative to the source site, summed over t.

    Positive values mean the weight sits to the right of ``k``.
    """
    a = grid.abs_F
    total = a.sum()
    if total == 0:
        raise ValueError("empty OTOC grid")
    return float(((grid.sites - grid.k)[:, None] * a).sum() / total)


class _Sector:
    """Dense Hamiltonian of one particle-number sector with eigenbasis propagators."""

    def __init__(self, params: ModelParams, N: int):
        self.basis = enumerate_basis(params.L, N, params.cap)
        self.H = build_hamiltonian(params.replace(N=N), self.basis).toarray()
        self._eig = None

    def _decomp(self):
        if self._eig is None:
            w, R = sla.eig(self.H)
            Rinv = np.linalg.inv(R)
            self._eig = (w, R, Rinv)
            cond = np.linalg.norm(R, 2) * np.linalg.norm(Rinv, 2)
            if cond > 1e8:
                warnings.warn(f"eigenvector condition number {cond:.3g}; OTOC propagators "
                              "may lose accuracy", ThermalConditioningWarning, stacklevel=3)
        return self._eig

    def _factors(self, t, kind):
        # kind: "-H" exp(-iHt), "+H" exp(iHt), "+Hdag" exp(iH^dag t), "-Hdag" exp(-iH^dag t)
        w, R, Rinv = self._decomp()
        sign = -1j if kind.startswith("-") else 1j
        if kind.endswith("dag"):
            return Rinv.conj().T, np.exp(sign * w.conj() * t), R.conj().T
        return R, np.exp(sign * w * t), Rinv

    def matrix(self, t, kind):
        A, d, B = self._factors(t, kind)
        return (A * d) @ B

    def apply(self, t, kind, v):
        A, d, B = self._factors(t, kind)
        return A @ (d * (B @ v))


def _left_kind(convention):
    return "+Hdag" if convention == "adjoint" else "+H"


def _sectors(params: ModelParams, depth: int = 2):
    if params.N < depth:
        raise ValueError(f"the OTOC needs at least {depth} particles")
    return [_Sector(params, params.N - d) for d in range(depth + 1)]


def exchange_phase(theta: float, j: int, k: int) -> complex:
    """c with a_j a_k = c a_k a_j for the Jordan-Wigner operators used here."""
    return np.exp(1j * theta * np.sign(j - k))


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")


def thermal_density_matrix(H, beta: float, ensemble: str = "right_eigen") -> np.ndarray:
    """Normalized thermal weight matrix of one sector."""
    if ensemble not in ENSEMBLES:
        raise ValueError(f"ensemble must be one of {ENSEMBLES}")
    H = _dense(H)
    if ensemble == "trace":
        rho = sla.expm(-beta * H)
    else:
        w, R = sla.eig(H)
        R = R / np.linalg.norm(R, axis=0)
        # shift by the smallest real part so large beta cannot overflow
        weights = np.exp(-beta * (w - w.real.min()))
        rho = (R * weights) @ R.conj().T
    Z = np.trace(rho)
    if abs(Z) < 1e-300 or abs(Z.imag) > 1e-8 * abs(Z):
        warnings.warn(f"thermal normalization {Z:.3g} is ill-conditioned",
                      ThermalConditioningWarning, stacklevel=2)
    return rho / Z


def thermal_otoc(params: ModelParams, beta: float, k: int, times, sites=None,
                 convention: str = "similarity", ensemble: str = "right_eigen",
                 with_commutator: bool = True) -> OtocGrid:
    """Thermal C_jk(t) and F_jk(t) over the fixed-N sector of ``params``.

    With c = exchange_phase(theta, j, k), C_jk = <X^dag X>_beta for
    X = a_j(t) a_k - c a_k a_j(t), which vanishes at t = 0, and
    F_jk = conj(c) <a_j^dag(t) a_k^dag a_j(t) a_k>_beta.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    _check_convention(convention)
    times = np.asarray(times, dtype=float)
    sites = np.arange(1, params.L + 1) if sites is None else np.asarray(sites)
    s0, s1, s2 = _sectors(params)
    th = params.theta
    rho = thermal_density_matrix(s0.H, beta, ensemble)
    need = sorted(set(int(j) for j in sites) | {k})
    a1 = {j: anyon_annihilation(s0.basis, j, th, s1.basis).toarray() for j in need}  # N -> N-1
    a2 = {j: anyon_annihilation(s1.basis, j, th, s2.basis).toarray() for j in need}  # N-1 -> N-2
    left = _left_kind(convention)
    F = np.zeros((len(sites), len(times)), dtype=complex)
    C = np.zeros((len(sites), len(times))) if with_commutator else None
    for it, t in enumerate(times):
        f0, f1 = s0.matrix(t, "-H"), s1.matrix(t, "-H")
        l1, l2 = s1.matrix(t, left), s2.matrix(t, left)
        if convention == "similarity":
            up0 = s0.matrix(t, "+H")
        for ij, j in enumerate(sites):
            aj_top = l1 @ a1[j] @ f0
            aj_low = l2 @ a2[j] @ f1
            if convention == "similarity":
                ajdag_top = up0 @ a1[j].conj().T @ s1.matrix(t, "-H")
            else:
                ajdag_top = aj_top.conj().T
            chain = ajdag_top @ a2[k].conj().T @ aj_low @ a1[k]
            c = exchange_phase(th, j, k)
            F[ij, it] = np.trace(rho @ chain) * np.conj(c)
            if with_commutator:
                X = aj_low @ a1[k] - c * (a2[k] @ aj_top)
                C[ij, it] = float(np.real(np.trace(rho @ (X.conj().T @ X))))
    return OtocGrid(times=times, k=k, sites=sites, F=F, C=C)


def _forward_on_grid(H, v, times):
    """Rows exp(-i H t) v for every t, via scipy's expm_multiply."""
    A = sp.csr_matrix(H) * (-1j)
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if len(times) > 1 and times[0] == 0 and np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        return expm_multiply(A, v, start=0.0, stop=times[-1], num=len(times), endpoint=True)
    return np.array([expm_multiply(A * t, v) for t in times])


def state_otoc(params: ModelParams, psi0, k: int, times, sites=None,
               convention: str = "similarity") -> OtocGrid:
    """F_jk(t) with the thermal average replaced by the expectation in ``psi0``."""
    _check_convention(convention)
    times = np.asarray(times, dtype=float)
    sites = np.arange(1, params.L + 1) if sites is None else np.asarray(sites)
    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    s0, s1, s2 = _sectors(params)
    th = params.theta
    need = sorted(set(int(j) for j in sites) | {k})
    a1 = {j: anyon_annihilation(s0.basis, j, th, s1.basis) for j in need}
    a2 = {j: anyon_annihilation(s1.basis, j, th, s2.basis) for j in need}
    left = _left_kind(convention)
    ak_psi = a1[k] @ psi0
    # the top sector is only propagated forward (by H, or by H^dag for the bra
    # of the similarity convention), so it never needs an eigensystem
    top = _forward_on_grid(s0.H, psi0, times)
    if convention == "similarity":
        top_bra = _forward_on_grid(s0.H.conj().T, psi0, times)
    F = np.zeros((len(sites), len(times)), dtype=complex)
    for it, t in enumerate(times):
        f1_akpsi = s1.apply(t, "-H", ak_psi)
        for ij, j in enumerate(sites):
            # Y = a_k^dag a_j(t) a_k psi0 in the N-1 sector
            Y = a2[k].conj().T @ s2.apply(t, left, a2[j] @ f1_akpsi)
            if convention == "similarity":
                # <psi0| e^{iH t} a_j^dag e^{-iH t} Y
                val = np.vdot(top_bra[it], a1[j].conj().T @ s1.apply(t, "-H", Y))
            else:
                val = np.vdot(s1.apply(t, left, a1[j] @ top[it]), Y)
            F[ij, it] = val * np.conj(exchange_phase(th, j, k))
    return OtocGrid(times=times, k=k, sites=sites, F=F)
