"""Arnoldi approximation of exp(-i H tau) v for non-normal sparse H."""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla


class KrylovConvergenceError(ArithmeticError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _arnoldi(H, v, m):
    n = len(v)
    V = np.zeros((n, m + 1), dtype=complex)
    Hm = np.zeros((m + 1, m), dtype=complex)
    V[:, 0] = v
    for j in range(m):
        w = H @ V[:, j]
        # two passes of modified Gram-Schmidt; non-normal H loses orthogonality fast
        for _ in range(2):
            for i in range(j + 1):
                h = np.vdot(V[:, i], w)
                Hm[i, j] += h
                w = w - h * V[:, i]
        beta = np.linalg.norm(w)
        Hm[j + 1, j] = beta
        if beta < 1e-13:
            return V[:, : j + 1], Hm[: j + 2, : j + 1], True
        V[:, j + 1] = w / beta
    return V, Hm, False


def _local_step(Hm, tau, k):
    """exp of the augmented Arnoldi matrix; returns (coefficients, error estimate)."""
    aug = np.zeros((k + 1, k + 1), dtype=complex)
    aug[:k, :k] = -1j * tau * Hm[:k, :k]
    aug[k, k - 1] = 1.0
    E = sla.expm(aug)
    coeff = E[:k, 0]
    # Saad's a posteriori estimate: h_{k+1,k} * tau * |e_k^T phi_1(-i tau H_k) e_1|
    err = abs(Hm[k, k - 1]) * tau * abs(E[k, 0])
    return coeff, err


def expm_multiply_krylov(H, v, t: float, m: int = 30, tol: float = 1e-10,
                         max_substeps: int = 100000):
    """Propagate ``v`` by exp(-i H t) with adaptive substeps.

    The vector is renormalized after every substep. Returns
    ``(unit_vector, log_norm)`` where ``log_norm`` is the log of the norm the
    unnormalized product would have had.
    """
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("cannot propagate the zero vector")
    w = v / nrm
    log_norm = math.log(nrm)
    if t == 0:
        return w, log_norm
    m = min(m, len(v))
    done, tau_next, steps = 0.0, t, 0
    while done < t * (1 - 1e-14):
        V, Hm, happy = _arnoldi(H, w, m)
        k = Hm.shape[1]
        # keep |tau H_k| moderate so the local exponential cannot over- or underflow
        tau_cap = 30.0 / max(np.abs(Hm[:k, :k]).sum(axis=0).max(), 1e-300)
        tau = min(tau_next, t - done, tau_cap)
        while True:
            coeff, err = _local_step(Hm, tau, k)
            scale = max(np.linalg.norm(coeff), 1e-300)
            if happy or err <= tol * scale:
                break
            tau *= 0.5
            if tau < t * 1e-12:
                raise KrylovConvergenceError(
                    f"substep collapsed below {tau:.3g}; local error {err:.3g}", err)
        w = V[:, :k] @ coeff
        nrm = np.linalg.norm(w)
        log_norm += math.log(nrm)
        w = w / nrm
        done += tau
        # let a successful step grow again
        tau_next = tau * 2 if not happy else t
        steps += 1
        if steps > max_substeps:
            raise KrylovConvergenceError("too many substeps", err)
    return w, log_norm
