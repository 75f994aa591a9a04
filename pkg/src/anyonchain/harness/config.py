"""Experiment configuration, preset defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

PRESETS = (
    "fig1", "fig2", "fig3", "fig4", "supp-winding", "supp-hardcore",
    "supp-arrangements", "supp-weak-alpha", "supp-largeU", "supp-n3-correlation", "custom",
)

DEFAULT_DIM_CEILING = 50_000
LARGE_DIM_CEILING = 2_000_000

PI = math.pi

# Sweep lists per preset. A scalar override (--theta, --U, --alpha) collapses
# the matching list to that single value.
PRESET_DEFAULTS: dict[str, dict] = {
    "fig1": dict(L=30, N=2, alpha=0.1, t_max=6.0,
                 panels=[[0.0, 0.0], [0.0, 4.0], [-PI / 2, 0.0], [-PI / 2, 4.0]]),
    "fig2": dict(L=30, N=2, theta=-PI / 2, U=4.0, t_max=6.0,
                 alpha_list=[0.05, 0.1, 0.2, 0.3],
                 theta_list=[-PI, -3 * PI / 4, -PI / 2, -PI / 4, 0.0, PI / 2],
                 grid_theta=[-3 * PI / 4, -PI / 2, -PI / 4, 0.0, PI / 2],
                 grid_U=[0.0, 1.0, 3.0, 5.0, 8.0],
                 gamma_L=20, gamma_U=[0.0, 4.0, 8.0],
                 gamma_times=[0.0, 1.0, 2.0, 3.0, 4.0]),
    "fig3": dict(theta=-PI / 2, alpha=0.1, t_max=6.0, N_list=[2, 3, 4], U_list=[5.0]),
    "fig4": dict(theta=-PI / 2, U=4.0, beta=1 / 6,
                 otoc_convention="similarity", otoc_ensemble="right_eigen",
                 thermal_L=7, thermal_N=4, thermal_k=4, thermal_JR=[1.0, 1.02, 1.25],
                 thermal_t_max=10.0, thermal_dt=0.25,
                 state_L=11, state_N=5, state_k=6, state_JR=[1.0, 1.25, 1.5],
                 state_occupied=[4, 5, 6, 7, 8], state_t_max=2.0, state_dt=0.1),
    "supp-winding": dict(L=20, N=2, J_L=1.0, J_R=1.2, bc="pbc",
                         panels=[[-PI / 2, 4.0]], E_b=[0.0, -3.0, -4.1], n_phi=256),
    "supp-hardcore": dict(L=20, N=2, cap=1, U=4.0, theta=-PI / 2, alpha=0.1, t_max=10.0),
    "supp-arrangements": dict(L=30, N=2, U=4.0, theta=-PI / 2, alpha=0.1, t_max=6.0,
                              arrangements={"adjacent": {"15": 1, "16": 1},
                                            "same_site": {"15": 2},
                                            "separated": {"14": 1, "16": 1}}),
    "supp-weak-alpha": dict(L=40, N=2, U=4.0, theta=-PI / 2, t_max=20.0,
                            alpha_list=[0.001, 0.01]),
    "supp-largeU": dict(L=20, N=2, alpha=0.1, theta=-PI / 2, U_list=[10.0, 20.0]),
    "supp-n3-correlation": dict(L=20, N=3, alpha=0.1, theta=-PI / 2, t_max=4.0,
                                U_list=[0.0, 4.0], gamma_times=[0.0, 1.0, 2.0, 3.0, 4.0]),
    "custom": dict(L=10, N=2, alpha=0.1, t_max=6.0),
}

# presets that report a density imbalance and therefore need a centre rule on odd L
IMBALANCE_PRESETS = {"fig1", "fig2", "fig3", "supp-hardcore", "supp-arrangements",
                     "supp-weak-alpha", "supp-n3-correlation", "custom"}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class ExperimentConfig:
    preset: str = "custom"
    L: int | None = None
    N: int | None = None
    theta: float | None = None
    U: float | None = None
    alpha: float | None = None
    J_L: float | None = None
    J_R: float | None = None
    bc: str | None = None
    phi: float | None = None
    cap: int | None = None
    t_max: float | None = None
    dt: float | None = None
    method: str = "auto"
    out: str = "results"
    allow_large: bool = False
    exclude_center: bool | None = None
    offset: int | None = None
    dim_ceiling: int | None = None
    extra: dict = field(default_factory=dict)  # preset sweep lists after resolution

    def to_dict(self) -> dict:
        return asdict(self)


_SCALAR_FIELDS = {f.name for f in fields(ExperimentConfig)} - {"extra"}


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a flat JSON document of ExperimentConfig fields."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: expected a JSON object"])
    unknown = sorted(set(data) - _SCALAR_FIELDS - {"extra"})
    extra = dict(data.pop("extra", {}) or {})
    for key in unknown:
        extra[key] = data.pop(key)
    return ExperimentConfig(**data, extra=extra)


def _collapse(extra: dict, key: str, value):
    if key in extra and value is not None:
        extra[key] = [value]


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """Fill preset defaults and check invariants; raises ConfigError listing every problem."""
    errors: list[str] = []
    if config.preset not in PRESETS:
        raise ConfigError([f"unknown preset {config.preset!r}; choose from {', '.join(PRESETS)}"])
    defaults = dict(PRESET_DEFAULTS[config.preset])
    explicit_hops = config.J_L is not None or config.J_R is not None
    if config.alpha is not None and explicit_hops:
        errors.append("alpha and explicit J_L/J_R are both set; give one parametrization")

    resolved = {}
    for name in _SCALAR_FIELDS:
        value = getattr(config, name)
        resolved[name] = value if value is not None else defaults.pop(name, None)
        defaults.pop(name, None)
    if explicit_hops:
        resolved["alpha"] = None
    extra = {**defaults, **config.extra}
    # explicit scalars collapse the sweeps they parametrize
    _collapse(extra, "alpha_list", config.alpha)
    _collapse(extra, "theta_list", config.theta)
    _collapse(extra, "U_list", config.U)
    _collapse(extra, "N_list", config.N)
    if "panels" in extra and (config.theta is not None or config.U is not None):
        base = extra["panels"][0]
        extra["panels"] = [[config.theta if config.theta is not None else base[0],
                            config.U if config.U is not None else base[1]]]

    if resolved["theta"] is None:
        resolved["theta"] = 0.0
    if resolved["U"] is None:
        resolved["U"] = 0.0
    if resolved["alpha"] is None and resolved["J_L"] is None and resolved["J_R"] is None:
        resolved["alpha"] = 0.0
    if resolved["J_L"] is None and resolved["alpha"] is None:
        resolved["J_L"] = 1.0
    if resolved["J_R"] is None and resolved["alpha"] is None:
        resolved["J_R"] = 1.0
    if resolved["bc"] is None:
        resolved["bc"] = "obc"
    if resolved["phi"] is None:
        resolved["phi"] = 0.0
    if resolved["dt"] is None:
        resolved["dt"] = 0.05
    if resolved["t_max"] is None:
        resolved["t_max"] = 6.0
    if resolved["dim_ceiling"] is None:
        resolved["dim_ceiling"] = LARGE_DIM_CEILING if resolved["allow_large"] else DEFAULT_DIM_CEILING

    if resolved["bc"] not in ("obc", "pbc", "open", "periodic"):
        errors.append(f"bc must be obc or pbc, got {resolved['bc']!r}")
    if resolved["method"] not in ("auto", "dense", "krylov"):
        errors.append(f"method must be dense, krylov or auto, got {resolved['method']!r}")
    if resolved["dt"] <= 0:
        errors.append("dt must be positive")
    if resolved["t_max"] < 0:
        errors.append("t_max must be non-negative")
    for hop in ("J_L", "J_R"):
        if resolved[hop] is not None and resolved[hop] < 0:
            errors.append(f"{hop} must be non-negative")
    if resolved["phi"] and resolved["bc"] in ("obc", "open"):
        errors.append("a boundary twist phi needs bc=pbc")
    if config.preset == "supp-winding" and resolved["bc"] not in ("pbc", "periodic"):
        errors.append("supp-winding needs periodic boundaries (bc=pbc)")
    L, N, cap = resolved["L"], resolved["N"], resolved["cap"]
    if L is not None and L < 1:
        errors.append("L must be positive")
    if N is not None and N < 0:
        errors.append("N must be non-negative")
    if cap is not None:
        if cap < 1:
            errors.append("cap must be at least 1")
        elif L is not None and N is not None and N > L * cap:
            errors.append(f"N={N} does not fit on L={L} sites with cap={cap}")
    if (config.preset in IMBALANCE_PRESETS and L is not None and L % 2
            and not resolved["exclude_center"]):
        errors.append(f"odd L={L} needs exclude_center: the imbalance drops the density at "
                      "the center site (L=31, N=3 convention)")
    if extra.get("otoc_convention", "similarity") not in ("similarity", "adjoint", "inverse"):
        errors.append(f"otoc_convention must be similarity, adjoint or inverse, "
                      f"got {extra['otoc_convention']!r}")
    if extra.get("otoc_ensemble", "right_eigen") not in ("right_eigen", "trace"):
        errors.append(f"otoc_ensemble must be right_eigen or trace, got {extra['otoc_ensemble']!r}")
    for n in extra.get("N_list", []):
        if config.preset == "fig3" and n >= 6 and not resolved["allow_large"]:
            errors.append(f"N={n} needs --allow-large (Fock dimension above 10^6)")
    if errors:
        raise ConfigError(errors)
    resolved["bc"] = {"open": "obc", "periodic": "pbc"}.get(resolved["bc"], resolved["bc"])
    return ExperimentConfig(**resolved, extra=extra)
