"""Normalized non-unitary evolution and density observables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fock import FockBasis, fock_state, inversion_permutation
from .krylov import expm_multiply_krylov
from .model import ModelParams, build_hamiltonian

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class EvolvedState:
    amplitudes: np.ndarray
    time: float
    log_norm: float = 0.0  # log of the norm before the final normalization


@dataclass
class TimeSeries:
    times: np.ndarray
    density: np.ndarray  # rows = times, columns = sites 1..L
    metadata: dict = field(default_factory=dict)
    states: np.ndarray | None = None  # optional amplitudes per sample

    @property
    def L(self) -> int:
        return self.density.shape[1]


def _resolve_method(H, method):
    if method == "auto":
        return "dense" if H.shape[0] <= DENSE_LIMIT else "krylov"
    if method not in ("dense", "krylov"):
        raise ValueError(f"unknown propagation method {method!r}")
    return method


def propagate(H, psi0, t: float, method: str = "auto", **krylov_opts) -> EvolvedState:
    """exp(-iHt) psi0 normalized to unit norm."""
    if t < 0:
        raise ValueError("t must be non-negative")
    psi0 = np.asarray(psi0, dtype=complex)
    method = _resolve_method(H, method)
    if method == "krylov":
        w, log_norm = expm_multiply_krylov(H, psi0, t, **krylov_opts)
        return EvolvedState(w, t, log_norm)
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    w = sla.expm(-1j * t * A) @ psi0
    nrm = np.linalg.norm(w)
    if not np.isfinite(nrm) or nrm == 0:
        raise OverflowError(f"dense propagation lost the state (norm {nrm})")
    return EvolvedState(w / nrm, t, float(np.log(nrm)))


def central_sites(L: int, N: int, offset: int | None = None) -> list[int]:
    """The N adjacent central sites (1-based); odd L - N needs an explicit offset."""
    if N > L:
        raise ValueError("more particles than sites")
    if offset is None:
        if (L - N) % 2:
            raise ValueError(f"centering {N} particles on {L} sites is ambiguous; pass offset")
        offset = (L - N) // 2
    if offset < 0 or offset + N > L:
        raise ValueError("offset places particles outside the chain")
    return list(range(offset + 1, offset + N + 1))


def uniform_center_state(basis: FockBasis, offset: int | None = None) -> np.ndarray:
    """One particle on each of the N central sites."""
    occ = np.zeros(basis.L, dtype=int)
    occ[np.array(central_sites(basis.L, basis.N, offset)) - 1] = 1
    return fock_state(basis, occ)


def occupation_state(basis: FockBasis, sites: dict[int, int]) -> np.ndarray:
    """Fock state from a ``{site: count}`` mapping with 1-based sites."""
    occ = np.zeros(basis.L, dtype=int)
    for j, n in sites.items():
        occ[j - 1] = n
    return fock_state(basis, occ)


def densities(psi, basis: FockBasis) -> np.ndarray:
    """<n_j> on a state (normalized internally); works on a batch of rows too."""
    prob = np.abs(np.atleast_2d(psi)) ** 2
    prob = prob / prob.sum(axis=1, keepdims=True)
    out = prob @ basis.states
    return out[0] if np.ndim(psi) == 1 else out


def time_grid(t_max: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(t_max / dt))
    return np.arange(n + 1) * dt


def evolve_samples(H, psi0, times, method: str = "auto", **krylov_opts) -> np.ndarray:
    """Normalized states on a uniform time grid, stepping sample to sample."""
    times = np.asarray(times, dtype=float)
    method = _resolve_method(H, method)
    out = np.empty((len(times), len(psi0)), dtype=complex)
    psi = np.asarray(psi0, dtype=complex) / np.linalg.norm(psi0)
    out[0] = psi
    steps = np.diff(times)
    step_op = None
    if method == "dense" and len(steps) and np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        A = H.toarray() if sp.issparse(H) else np.asarray(H)
        step_op = sla.expm(-1j * steps[0] * A)
    for i, h in enumerate(steps, start=1):
        if step_op is not None:
            psi = step_op @ psi
            psi = psi / np.linalg.norm(psi)
        else:
            psi = propagate(H, psi, h, method, **krylov_opts).amplitudes
        out[i] = psi
    return out


def density_series(params: ModelParams, psi0, t_max: float = 6.0, dt: float = 0.05,
                   method: str = "auto", keep_states: bool = False,
                   H=None, meta: dict | None = None) -> TimeSeries:
    basis = params.basis
    if H is None:
        H = build_hamiltonian(params, basis)
    times = time_grid(t_max, dt)
    states = evolve_samples(H, psi0, times, method)
    metadata = {"params": params.to_dict(), "t_max": t_max, "dt": dt}
    if meta:
        metadata.update(meta)
    return TimeSeries(times=times, density=densities(states, basis), metadata=metadata,
                      states=states if keep_states else None)


def imbalance(series: TimeSeries | np.ndarray, exclude_center: bool = False) -> np.ndarray:
    """Right-half minus left-half particle number for every sample.

    Odd chains need ``exclude_center`` so the middle site is dropped.
    """
    n = series.density if isinstance(series, TimeSeries) else np.atleast_2d(series)
    L = n.shape[1]
    if L % 2:
        if not exclude_center:
            raise ValueError(f"odd L={L}: the center site must be excluded explicitly")
        half = L // 2
        return n[:, half + 1:].sum(axis=1) - n[:, :half].sum(axis=1)
    half = L // 2
    return n[:, half:].sum(axis=1) - n[:, :half].sum(axis=1)


def decreasing_intervals(times, dN, slope_eps: float, smooth: int | None = None):
    """Maximal runs of samples whose centered slope is below ``-slope_eps``.

    Returned as ``(t_first, t_last, duration)`` with each sample weighted by dt.
    """
    times = np.asarray(times, dtype=float)
    dN = np.asarray(dN, dtype=float)
    if smooth and smooth > 1:
        kernel = np.ones(smooth) / smooth
        dN = np.convolve(dN, kernel, mode="same")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("reversed_interval needs a uniform grid")
    slope = np.gradient(dN, dt)
    mask = slope < -slope_eps
    runs, i = [], 0
    while i < len(mask):
        if mask[i]:
            j = i
            while j + 1 < len(mask) and mask[j + 1]:
                j += 1
            runs.append((times[i], times[j], (j - i + 1) * dt))
            i = j + 1
        else:
            i += 1
    return runs


def reversed_interval(times, dN, slope_eps: float | None = None, N: int | None = None,
                      mode: str = "sum", smooth: int | None = None) -> float:
    """Duration with dDeltaN/dt < 0 (all runs summed, or the longest with mode='max')."""
    if slope_eps is None:
        slope_eps = 1e-4 * (N if N else 1)
    runs = decreasing_intervals(times, dN, slope_eps, smooth)
    if not runs:
        return 0.0
    durations = [r[2] for r in runs]
    if mode == "sum":
        return float(sum(durations))
    if mode == "max":
        return float(max(durations))
    raise ValueError(f"unknown mode {mode!r}")


def density_correlation(psi, basis: FockBasis) -> np.ndarray:
    """Gamma_qr = <n_q n_r> on a normalized state."""
    p = np.abs(np.asarray(psi)) ** 2
    p = p / p.sum()
    occ = basis.states.astype(float)
    return occ.T @ (occ * p[:, None])


def transition_asymmetry(psi0, psi1, H, t: float, basis: FockBasis, atol: float = 1e-12):
    """|<psi1|e^{-iHt}|psi0>| and |<I psi1|e^{-iHt}|psi0>| for inversion-symmetric psi0."""
    perm = inversion_permutation(basis)
    psi0 = np.asarray(psi0, dtype=complex)
    mirrored = np.empty_like(psi0)
    mirrored[perm] = psi0
    overlap = np.vdot(psi0, mirrored)
    if abs(abs(overlap) - np.vdot(psi0, psi0).real) > atol * max(1.0, np.vdot(psi0, psi0).real):
        raise ValueError("initial state is not inversion symmetric")
    psi1 = np.asarray(psi1, dtype=complex)
    psi2 = np.empty_like(psi1)
    psi2[perm] = psi1
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    evolved = sla.expm(-1j * t * A) @ psi0
    return abs(np.vdot(psi1, evolved)), abs(np.vdot(psi2, evolved))
