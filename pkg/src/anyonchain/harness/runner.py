"""Preset task construction, execution and output files."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import (central_sites, density_correlation, density_series, imbalance,
                        occupation_state, reversed_interval, time_grid)
from ..fock import fock_state, sector_dimension
from ..model import ModelParams, build_hamiltonian
from ..otoc import normalize_grid, spreading_asymmetry, state_otoc, thermal_otoc
from ..spectra import (NoSeparatedCluster, bound_state_loop, density_profiles, eigendecompose,
                       effective_bound_hamiltonian, hausdorff_distance)
from ..topology import SingularDeterminant, swept_spectrum, winding_scan
from .config import ExperimentConfig, validate_config

WORKERS_ENV = "ANYONCHAIN_WORKERS"
DENSE_SPECTRUM_LIMIT = 6000

HEADERS = {
    "spectrum": ("index", "re", "im"),
    "profile": ("state_index", "site", "rho"),
    "density": ("t", "site", "n"),
    "imbalance": ("t", "dN"),
    "gamma": ("t", "q", "r", "gamma"),
    "otoc": ("t", "j", "k", "re_F", "im_F", "abs_F_normalized"),
    "winding": ("re_Eb", "im_Eb", "W", "residual"),
    "reversed_grid": ("theta", "U", "reversed_dt"),
}


class DimensionCeilingError(RuntimeError):
    pass


@dataclass
class RunManifest:
    config: dict
    files: list = field(default_factory=list)
    wall_time: float = 0.0
    residuals: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    version: str = __version__

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {"config": self.config, "files": self.files, "wall_time": self.wall_time,
                "residuals": self.residuals, "errors": self.errors, "version": self.version}


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def write_csv(path: Path, kind: str, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADERS[kind])
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _spectrum_rows(values):
    return ((i, v.real, v.imag) for i, v in enumerate(values))


def _profile_rows(per_state):
    n_states, L = per_state.shape
    return ((s, x + 1, per_state[s, x]) for s in range(n_states) for x in range(L))


def _density_rows(times, density):
    return ((t, x + 1, density[i, x]) for i, t in enumerate(times) for x in range(density.shape[1]))


def _gamma_rows(snapshots):
    for t, G in snapshots:
        L = G.shape[0]
        for q in range(L):
            for r in range(L):
                yield t, q + 1, r + 1, G[q, r]


def _otoc_rows(grid, normalized):
    a = normalized.abs_F
    for it, t in enumerate(grid.times):
        for ij, j in enumerate(grid.sites):
            F = grid.F[ij, it]
            yield t, int(j), grid.k, F.real, F.imag, a[ij, it]


# -- parameter helpers -------------------------------------------------------

def _params(cfg: dict, **over) -> ModelParams:
    c = {**cfg, **over}
    kw = dict(L=c["L"], N=c["N"], theta=c["theta"], U=c["U"], boundary=c["bc"],
              phi=c["phi"] if c["bc"] == "pbc" else 0.0, cap=c.get("cap"))
    if c.get("alpha") is not None:
        return ModelParams.with_alpha(alpha=c["alpha"], **kw)
    return ModelParams(J_L=c["J_L"], J_R=c["J_R"], **kw)


def _offset(L, N, cfg):
    if cfg.get("offset") is not None:
        return cfg["offset"]
    return (L - N) // 2


def _check_dim(L, N, cap, ceiling):
    dim = sector_dimension(L, N, cap)
    if dim > ceiling:
        raise DimensionCeilingError(
            f"Fock dimension {dim} for L={L}, N={N}, cap={cap} exceeds the ceiling {ceiling}")
    return dim


def _imbalance_of(series, L, exclude):
    return imbalance(series, exclude_center=bool(exclude) or L % 2 == 1)


def _evolution_files(out: Path, p: ModelParams, psi0, cfg, label):
    series = density_series(p, psi0, cfg["t_max"], cfg["dt"], cfg["method"])
    write_csv(out / "density.csv", "density", _density_rows(series.times, series.density))
    dN = _imbalance_of(series, p.L, cfg.get("exclude_center"))
    write_csv(out / "imbalance.csv", "imbalance", zip(series.times, dN))
    dt_rev = reversed_interval(series.times, dN, N=p.N)
    return series, dN, {f"{label}reversed_dt": dt_rev,
                        f"{label}final_dN": float(dN[-1]),
                        f"{label}max_density_sum_error": float(np.abs(series.density.sum(1) - p.N).max())}


# -- tasks --------------------------------------------------------------------
# Each task is a top-level function (picklable) returning a residual dict.

def task_static_panel(cfg, out, theta, U, evolve=True):
    out = Path(out)
    p = _params(cfg, theta=theta, U=U, bc="obc", phi=0.0)
    res = {}
    spec = eigendecompose(build_hamiltonian(p))
    write_csv(out / "spectrum.csv", "spectrum", _spectrum_rows(spec.values))
    prof = density_profiles(spec, p.basis)
    write_csv(out / "profile.csv", "profile", _profile_rows(prof.per_state))
    res["obc_max_abs_imag"] = float(np.abs(spec.values.imag).max())
    res["eigen_residual_obc"] = spec.residual
    pbc = eigendecompose(build_hamiltonian(p.replace(boundary="pbc")))
    write_csv(out / "spectrum_pbc.csv", "spectrum", _spectrum_rows(pbc.values))
    res["pbc_max_abs_imag"] = float(np.abs(pbc.values.imag).max())
    try:
        res["bound_cluster_size_pbc"] = int(len(bound_state_loop(pbc, U)))
    except NoSeparatedCluster:
        res["bound_cluster_size_pbc"] = 0
    res["average_profile"] = prof.average.tolist()
    if evolve:
        psi0 = fock_state(p.basis, _center_occ(p, cfg))
        _, _, r = _evolution_files(out, p, psi0, cfg, "")
        res.update(r)
    return res


def _center_occ(p, cfg):
    occ = np.zeros(p.L, dtype=int)
    occ[np.array(central_sites(p.L, p.N, _offset(p.L, p.N, cfg))) - 1] = 1
    return occ


def task_evolution(cfg, out, over, occupation=None):
    out = Path(out)
    p = _params(cfg, **over)
    _check_dim(p.L, p.N, p.cap, cfg["dim_ceiling"])
    if occupation is None:
        psi0 = fock_state(p.basis, _center_occ(p, {**cfg, **over}))
    else:
        psi0 = occupation_state(p.basis, {int(k): int(v) for k, v in occupation.items()})
    _, _, res = _evolution_files(out, p, psi0, {**cfg, **over}, "")
    res["dim"] = p.basis.dim
    return res


def task_reversed_grid(cfg, out, thetas, Us):
    rows, res = [], {}
    best = (-1.0, None)
    for th in thetas:
        for U in Us:
            p = _params(cfg, theta=th, U=U, bc="obc", phi=0.0)
            psi0 = fock_state(p.basis, _center_occ(p, cfg))
            s = density_series(p, psi0, cfg["t_max"], cfg["dt"], cfg["method"])
            d = reversed_interval(s.times, _imbalance_of(s, p.L, cfg.get("exclude_center")), N=p.N)
            rows.append((th, U, d))
            if d > best[0]:
                best = (d, (th, U))
    write_csv(Path(out) / "reversed_dt.csv", "reversed_grid", rows)
    res["argmax_theta"], res["argmax_U"] = best[1]
    res["max_reversed_dt"] = best[0]
    return res


def task_gamma(cfg, out, over, times):
    out = Path(out)
    p = _params(cfg, **over)
    psi0 = fock_state(p.basis, _center_occ(p, {**cfg, **over}))
    grid = time_grid(max(times), cfg["dt"])
    s = density_series(p, psi0, grid[-1], cfg["dt"], cfg["method"], keep_states=True)
    snaps = []
    for t in times:
        i = int(np.argmin(np.abs(s.times - t)))
        snaps.append((s.times[i], density_correlation(s.states[i], p.basis)))
    write_csv(out / "gamma.csv", "gamma", _gamma_rows(snaps))
    write_csv(out / "density.csv", "density", _density_rows(s.times, s.density))
    return {"gamma_sum_error": float(max(abs(G.sum() - p.N ** 2) for _, G in snaps))}


def task_thermal_otoc(cfg, out, J_R):
    e = cfg["extra"]
    p = ModelParams(L=e["thermal_L"], N=e["thermal_N"], J_L=1.0, J_R=J_R,
                    theta=cfg["theta"], U=cfg["U"])
    times = time_grid(e["thermal_t_max"], e["thermal_dt"])
    g = thermal_otoc(p, e["beta"], e["thermal_k"], times,
                     convention=e.get("otoc_convention", "similarity"),
                     ensemble=e.get("otoc_ensemble", "right_eigen"))
    write_csv(Path(out) / "otoc.csv", "otoc", _otoc_rows(g, normalize_grid(g, "heatmap")))
    return {"C0_max": float(np.abs(g.C[:, 0]).max()), "asymmetry": spreading_asymmetry(g)}


def task_state_otoc(cfg, out, J_R):
    e = cfg["extra"]
    p = ModelParams(L=e["state_L"], N=e["state_N"], J_L=1.0, J_R=J_R,
                    theta=cfg["theta"], U=cfg["U"])
    psi0 = occupation_state(p.basis, {j: 1 for j in e["state_occupied"]})
    times = time_grid(e["state_t_max"], e["state_dt"])
    g = state_otoc(p, psi0, e["state_k"], times,
                   convention=e.get("otoc_convention", "similarity"))
    write_csv(Path(out) / "otoc.csv", "otoc", _otoc_rows(g, normalize_grid(g, "line")))
    return {"asymmetry": spreading_asymmetry(g)}


def task_winding(cfg, out, theta, U):
    out = Path(out)
    p = _params(cfg, theta=theta, U=U, bc="pbc", phi=0.0)
    e = cfg["extra"]
    write_csv(out / "spectrum.csv", "spectrum", _spectrum_rows(swept_spectrum(p, 32)))
    rows, res = [], {}
    for E in e["E_b"]:
        E = complex(E)
        try:
            s = winding_scan(p, E, e.get("n_phi", 256))
            rows.append((E.real, E.imag, s.W, s.residual))
            res[f"W({E.real:g}{E.imag:+g}j)"] = s.W
            res[f"residual({E.real:g}{E.imag:+g}j)"] = s.residual
        except SingularDeterminant as exc:
            rows.append((E.real, E.imag, "", "nan"))
            res[f"W({E.real:g}{E.imag:+g}j)"] = str(exc)
    write_csv(out / "winding.csv", "winding", rows)
    return res


def task_large_U(cfg, out, U):
    out = Path(out)
    p = _params(cfg, U=U, bc="obc", phi=0.0)
    spec = eigendecompose(build_hamiltonian(p))
    idx = bound_state_loop(spec, U)
    eff = np.linalg.eigvals(effective_bound_hamiltonian(p))
    write_csv(out / "spectrum.csv", "spectrum", _spectrum_rows(spec.values[idx]))
    write_csv(out / "spectrum_effective.csv", "spectrum", _spectrum_rows(np.sort_complex(eff)))
    return {"cluster_size": int(len(idx)), "hausdorff": hausdorff_distance(spec.values[idx], eff)}


# -- preset expansion ---------------------------------------------------------

def build_tasks(cfg: dict, root: Path) -> list[tuple[str, callable, tuple]]:
    preset, e = cfg["preset"], cfg["extra"]
    tasks = []
    if preset == "fig1":
        for label, (th, U) in zip("abcd", e["panels"]):
            tasks.append((f"panel_{label}", task_static_panel, (th, U)))
    elif preset == "fig2":
        for a in e["alpha_list"]:
            tasks.append((f"alpha_{a:g}", task_evolution, (dict(alpha=a, bc="obc", phi=0.0),)))
        a0 = cfg["alpha"] if cfg["alpha"] is not None else 0.1
        for th in e["theta_list"]:
            tasks.append((f"theta_{th:.4f}", task_evolution,
                          (dict(alpha=a0, theta=th, bc="obc", phi=0.0),)))
        tasks.append(("reversed_grid", task_reversed_grid, (e["grid_theta"], e["grid_U"])))
        for U in e["gamma_U"]:
            tasks.append((f"gamma_U_{U:g}", task_gamma,
                          (dict(L=e["gamma_L"], U=U, alpha=a0, bc="obc", phi=0.0),
                           e["gamma_times"])))
    elif preset == "fig3":
        for N in e["N_list"]:
            L = cfg["L"] if cfg["L"] is not None else (31 if N % 2 else 30)
            for U in e["U_list"]:
                tasks.append((f"N_{N}_U_{U:g}", task_evolution,
                              (dict(L=L, N=N, U=U, exclude_center=L % 2 == 1, bc="obc", phi=0.0),)))
    elif preset == "fig4":
        for J in e["thermal_JR"]:
            tasks.append((f"thermal_JR_{J:g}", task_thermal_otoc, (J,)))
        for J in e["state_JR"]:
            tasks.append((f"state_JR_{J:g}", task_state_otoc, (J,)))
    elif preset == "supp-winding":
        for th, U in e["panels"]:
            tasks.append((f"theta_{th:.4f}_U_{U:g}", task_winding, (th, U)))
    elif preset in ("supp-hardcore", "custom"):
        tasks.append(("run", task_evolution, ({},)))
        if preset == "custom":
            dim = sector_dimension(cfg["L"], cfg["N"], cfg["cap"])
            if dim <= DENSE_SPECTRUM_LIMIT:
                tasks.append(("static", task_static_panel, (cfg["theta"], cfg["U"], False)))
            tasks.append(("correlation", task_gamma,
                          ({}, sorted({0.0, cfg["t_max"] / 2, cfg["t_max"]}))))
    elif preset == "supp-arrangements":
        for name, occ in e["arrangements"].items():
            tasks.append((name, task_evolution, ({}, occ)))
    elif preset == "supp-weak-alpha":
        for a in e["alpha_list"]:
            tasks.append((f"alpha_{a:g}", task_evolution, (dict(alpha=a),)))
    elif preset == "supp-largeU":
        for U in e["U_list"]:
            tasks.append((f"U_{U:g}", task_large_U, (U,)))
    elif preset == "supp-n3-correlation":
        for U in e["U_list"]:
            tasks.append((f"U_{U:g}", task_gamma, (dict(U=U), e["gamma_times"])))
    return tasks


def _estimate(cfg: dict) -> int:
    """Largest Fock dimension a preset will allocate."""
    e = cfg["extra"]
    dims = []
    if cfg["preset"] == "fig3":
        for N in e["N_list"]:
            L = cfg["L"] if cfg["L"] is not None else (31 if N % 2 else 30)
            dims.append(sector_dimension(L, N, cfg["cap"]))
    elif cfg["preset"] == "fig4":
        dims.append(sector_dimension(e["state_L"], e["state_N"], cfg["cap"]))
        dims.append(sector_dimension(e["thermal_L"], e["thermal_N"], cfg["cap"]))
    elif cfg["L"] is not None and cfg["N"] is not None:
        dims.append(sector_dimension(cfg["L"], cfg["N"], cfg["cap"]))
    return max(dims) if dims else 0


def _run_task(name, fn, args, cfg, root):
    out = root / name
    t0 = time.perf_counter()
    try:
        res = fn(cfg, out, *args)
        return name, res, None, time.perf_counter() - t0
    except Exception as exc:  # recorded per task, the run continues
        return name, None, f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}", \
            time.perf_counter() - t0


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return None if not math.isfinite(float(x)) else float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> RunManifest:
    cfg_obj = validate_config(config)
    cfg = cfg_obj.to_dict()
    estimate = _estimate(cfg)
    if estimate > cfg["dim_ceiling"]:
        raise DimensionCeilingError(
            f"preset {cfg['preset']} needs Fock dimension {estimate}, above the ceiling "
            f"{cfg['dim_ceiling']} (use --allow-large for N=6 runs)")
    root = Path(cfg["out"])
    root.mkdir(parents=True, exist_ok=True)
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    tasks = build_tasks(cfg, root)
    t0 = time.perf_counter()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_task, n, f, a, cfg, root) for n, f, a in tasks]
            results = [f.result() for f in futures]
    else:
        results = [_run_task(n, f, a, cfg, root) for n, f, a in tasks]
    manifest = RunManifest(config=_jsonable(cfg))
    manifest.residuals["fock_dimension_estimate"] = estimate
    for name, res, err, elapsed in results:
        if err is not None:
            manifest.errors.append({"task": name, "error": err})
        else:
            manifest.residuals[name] = _jsonable({**res, "wall_time": elapsed})
    _summaries(cfg, root, results, manifest)
    manifest.wall_time = time.perf_counter() - t0
    for path in sorted(p for p in root.rglob("*") if p.is_file() and p.name != "manifest.json"):
        manifest.files.append({"path": str(path.relative_to(root)), "sha256": _digest(path),
                               "bytes": path.stat().st_size})
    (root / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
    return manifest


def _summaries(cfg, root, results, manifest):
    """Cross-task outputs such as the averaged skin profile comparison."""
    ok = {name: res for name, res, err, _ in results if err is None}
    if cfg["preset"] == "fig1":
        profiles = [(i, ok[n]["average_profile"]) for i, n in enumerate(sorted(ok))
                    if "average_profile" in ok[n]]
        if profiles:
            rows = ((i, x + 1, v) for i, prof in profiles for x, v in enumerate(prof))
            write_csv(root / "profile_average.csv", "profile", rows)
            P = np.array([p for _, p in profiles])
            manifest.residuals["average_profile_spread"] = float((P.max(0) - P.min(0)).max())
        for n in ok:
            ok[n].pop("average_profile", None)
            manifest.residuals[n].pop("average_profile", None)
    if cfg["preset"] == "supp-largeU" and len(ok) == 2:
        a, b = (ok[n]["hausdorff"] for n in sorted(ok, key=lambda s: float(s.split("_")[1])))
        manifest.residuals["hausdorff_ratio"] = a / b if b else None
