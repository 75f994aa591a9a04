"""Spectral winding number of the twisted periodic chain."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .model import PERIODIC, ModelParams, build_hamiltonian


class SingularDeterminant(ArithmeticError):
    """The reference energy lies on (or numerically at) the spectrum."""


class InconclusiveWinding(ArithmeticError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class WindingScan:
    E_b: complex
    phi_grid: np.ndarray
    phases: np.ndarray  # unwrapped arg det(H(phi) - E_b)
    W: int
    residual: float  # |trace-formula integral - W|


def twisted_hamiltonian(params: ModelParams, phi: float) -> sp.csr_matrix:
    if params.boundary != PERIODIC:
        raise ValueError("a boundary twist needs periodic boundary conditions")
    return build_hamiltonian(params, phi=phi)


def spread_twist_hamiltonian(params: ModelParams, phi: float) -> sp.csr_matrix:
    """Twist distributed as e^{+-i phi / L} over every bond instead of the boundary bond."""
    H = twisted_hamiltonian(params, phi)
    X = params.basis.states @ np.arange(1, params.L + 1)
    d = np.exp(-1j * phi * X / params.L)
    return (sp.diags(d) @ H @ sp.diags(1.0 / d)).tocsr()


def _dense(H):
    return H.toarray() if sp.issparse(H) else np.asarray(H, dtype=complex)


def logdet_phase(H, E_b: complex, rtol: float = 1e-13):
    """(log|det(H - E_b)|, arg det(H - E_b)) from a pivoted LU factorization."""
    A = _dense(H) - E_b * np.eye(H.shape[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=True)
    d = np.diag(lu)
    scale = max(np.abs(A).max(), 1.0)
    if np.abs(d).min() <= rtol * scale:
        raise SingularDeterminant(f"H - E_b is singular to working precision at E_b={E_b}")
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    log_abs = float(np.log(np.abs(d)).sum())
    arg = float(np.angle(d).sum() + np.pi * swaps)
    return log_abs, float(np.angle(np.exp(1j * arg)))


def _wrap(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


def _boundary_parts(params: ModelParams):
    # H(phi) = H0 + e^{i phi} B_plus + e^{-i phi} B_minus
    H0p = twisted_hamiltonian(params, 0.0).toarray()
    Hpi = twisted_hamiltonian(params, np.pi).toarray()
    Hhalf = twisted_hamiltonian(params, np.pi / 2).toarray()
    H0 = 0.5 * (H0p + Hpi)
    s = 0.5 * (H0p - Hpi)  # B_plus + B_minus
    d = (Hhalf - H0) / 1j  # B_plus - B_minus
    return H0, 0.5 * (s + d), 0.5 * (s - d)


def winding_scan(params: ModelParams, E_b: complex, n_phi: int = 256, max_depth: int = 12,
                 jump: float = np.pi / 2) -> WindingScan:
    """Unwrapped phase of det(H(phi) - E_b) over phi in [0, 2 pi].

    Intervals whose wrapped phase step exceeds ``jump`` are bisected.
    The residual compares the integer against the trapezoid rule applied to
    (1/2 pi i) Tr[(H - E_b)^{-1} dH/dphi].
    """
    if params.boundary != PERIODIC:
        raise ValueError("winding numbers need periodic boundary conditions")
    H0, Bp, Bm = _boundary_parts(params)
    eye = np.eye(H0.shape[0])

    def mat(phi):
        return H0 + np.exp(1j * phi) * Bp + np.exp(-1j * phi) * Bm

    def arg(phi):
        return logdet_phase(mat(phi), E_b)[1]

    coarse = np.linspace(0.0, 2 * np.pi, n_phi + 1)
    phis, args = [coarse[0]], [arg(coarse[0])]

    def refine(a, fa, b, fb, depth):
        if abs(_wrap(fb - fa)) <= jump or depth >= max_depth:
            phis.append(b); args.append(fb)
            return
        m = 0.5 * (a + b)
        fm = arg(m)
        refine(a, fa, m, fm, depth + 1)
        refine(m, fm, b, fb, depth + 1)

    for a, b in zip(coarse[:-1], coarse[1:]):
        refine(a, args[-1], b, arg(b), 0)
    phis, args = np.array(phis), np.array(args)
    steps = _wrap(np.diff(args))
    phases = args[0] + np.concatenate([[0.0], np.cumsum(steps)])
    W = int(round((phases[-1] - phases[0]) / (2 * np.pi)))

    # independent estimate of the same integral from the trace formula
    grid = coarse[:-1]
    vals = []
    for phi in grid:
        dH = 1j * np.exp(1j * phi) * Bp - 1j * np.exp(-1j * phi) * Bm
        lu = sla.lu_factor(mat(phi) - E_b * eye)
        vals.append(np.trace(sla.lu_solve(lu, dH)))
    integral = np.mean(vals) * 2 * np.pi / (2j * np.pi)
    residual = float(abs(integral - W))
    return WindingScan(E_b=complex(E_b), phi_grid=phis, phases=phases, W=W, residual=residual)


def winding_number(params: ModelParams, E_b: complex, n_phi: int = 256,
                   tol: float = 0.05) -> int:
    """Integer W(E_b); raises InconclusiveWinding when the cross-check disagrees."""
    scan = winding_scan(params, E_b, n_phi)
    if scan.residual > tol:
        raise InconclusiveWinding(
            f"winding at E_b={E_b} inconclusive: residual {scan.residual:.3g}", scan.residual)
    return scan.W


def swept_spectrum(params: ModelParams, n_phi: int = 64) -> np.ndarray:
    """All eigenvalues of H(phi) for phi on a uniform grid, flattened."""
    out = []
    for phi in np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False):
        out.append(np.linalg.eigvals(twisted_hamiltonian(params, phi).toarray()))
    return np.concatenate(out)
