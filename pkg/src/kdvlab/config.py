"""Run configuration: flat JSON-style dictionaries with explicit units in
key names, validated into a RunConfig with defaults filled."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, greens, initial_data
from .errors import ConfigError
from .grid import make_grid
from .spectral import sobolev_kappa_norm

EXPERIMENTS = (
    "conservation",
    "microlaw",
    "operator_scaling",
    "apriori_sweep",
    "bottom_roundtrip",
)

DEFAULT_TOLERANCES = {
    "alpha_drift": 1e-6,
    "l2_residual_kdv": 1e-8,
    "l2_residual_forced": 1e-4,
    "microlaw": 1e-6,
    "microlaw_refinement_factor": 2.0,
    "slope_plain": (-2.0, 0.15),
    "slope_with_derivative": (-1.0, 0.15),
    "slope_double_max": -1.85,
    "roundtrip": 1e-8,
    "equivalence": 1e-4,
    "coefficient_vanish": 1e-12,
    "sup_norm_factor": 10.0,
}


@dataclass
class RunConfig:
    experiment: str
    length_L: float = 50.0
    points_N: int = 512
    time_T: float = 0.1
    dt: float | None = None
    save_every: int | None = None
    kappa_list: tuple = (3.0,)
    initial_data: dict = field(default_factory=lambda: {"kind": "gaussian"})
    coefficients: dict = field(default_factory=lambda: {"kind": "zero"})
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int | None = None
    threads: int = 1
    snapshots_as: str = "npy"
    r_list: tuple = (0.5, 1.0, 2.0)
    variants: tuple = ("plain", "with_derivative", "double")

    def tolerance(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def canonical_json(self) -> str:
        d = {
            "experiment": self.experiment,
            "length_L": self.length_L,
            "points_N": self.points_N,
            "time_T": self.time_T,
            "dt": self.dt,
            "save_every": self.save_every,
            "kappa_list": list(self.kappa_list),
            "initial_data": self.initial_data,
            "coefficients": self.coefficients,
            "tolerances": {k: list(v) if isinstance(v, tuple) else v
                           for k, v in self.tolerances.items()},
            "output_dir": self.output_dir,
            "seed": self.seed,
            "threads": self.threads,
            "snapshots_as": self.snapshots_as,
            "r_list": list(self.r_list),
            "variants": list(self.variants),
        }
        return json.dumps(d, sort_keys=True)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


def coefficients_from_descriptor(grid, desc: dict) -> dynamics.CoefficientSet:
    """Build a CoefficientSet from a config descriptor."""
    from .grid import RealField

    kind = desc.get("kind", "zero")
    if kind == "zero":
        return dynamics.CoefficientSet.zero(grid)
    if kind == "constant":
        fields = {}
        for name in ("a1", "a2", "a3", "a4"):
            val = desc.get(name)
            if val:
                fields[name] = RealField(grid, np.full(grid.points, float(val)))
        return dynamics.CoefficientSet.from_fields(
            grid, metadata=dict(desc), **fields
        )
    if kind == "lorentzian":
        xc = grid.centered()
        fields = {}
        for name in ("a1", "a2", "a3", "a4"):
            amp = desc.get(name, 0.0)
            if amp:
                fields[name] = RealField(grid, float(amp) / (1 + xc**2))
        return dynamics.CoefficientSet.from_fields(
            grid, metadata=dict(desc), **fields
        )
    if kind == "bottom":
        from .bottom import profile_from_descriptor, synth_coefficients

        profile = profile_from_descriptor(grid, desc.get("profile", {"kind": "sech2"}))
        return synth_coefficients(profile)
    raise ValueError(f"unknown coefficients kind {kind!r}")


def validate(raw: dict) -> RunConfig:
    """Normalize a raw config dict; raise ConfigError listing every problem."""
    errors = []
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        errors.append(("experiment", f"must be one of {EXPERIMENTS}, got {exp!r}"))
    cfg = RunConfig(experiment=exp if exp in EXPERIMENTS else "conservation")
    for key in ("length_L", "time_T"):
        if key in raw:
            try:
                setattr(cfg, key, float(raw[key]))
            except (TypeError, ValueError):
                errors.append((key, "must be a number"))
    if cfg.length_L <= 0:
        errors.append(("length_L", "must be positive"))
    if "points_N" in raw:
        n = raw["points_N"]
        if not isinstance(n, int) or isinstance(n, bool):
            errors.append(("grid.N", "must be an integer"))
        elif n % 2 != 0:
            errors.append(("grid.N", f"{n} is odd; point count must be even"))
        elif n < 8:
            errors.append(("grid.N", f"{n} < 8"))
        else:
            cfg.points_N = n
    grid = None
    if not any(f in ("grid.N", "length_L") for f, _ in errors):
        grid = make_grid(cfg.length_L, cfg.points_N)
    if raw.get("dt") is not None:
        cfg.dt = float(raw["dt"])
        if grid is not None and cfg.dt > dynamics.default_dt(grid) * (1 + 1e-12):
            errors.append(
                ("time.dt", f"dt = {cfg.dt:g} above the cap 0.4/xi_max^3 = "
                            f"{dynamics.default_dt(grid):g}")
            )
        if cfg.dt <= 0:
            errors.append(("time.dt", "must be positive"))
    if raw.get("save_every") is not None:
        cfg.save_every = int(raw["save_every"])
    kl = raw.get("kappa_list", list(cfg.kappa_list))
    try:
        kl = [float(k) for k in kl]
    except (TypeError, ValueError):
        errors.append(("kappa_list", "must be a list of numbers"))
        kl = []
    for k in kl:
        if k < 1.0:
            errors.append(("kappa_list", f"kappa = {k} below the standing assumption kappa >= 1"))
        elif grid is not None and k * grid.dx > 0.5:
            errors.append(("kappa_list", f"kappa*dx = {k * grid.dx:.3f} > 0.5: kernel unresolved"))
    cfg.kappa_list = tuple(kl)
    cfg.initial_data = dict(raw.get("initial_data", cfg.initial_data))
    cfg.coefficients = dict(raw.get("coefficients", cfg.coefficients))
    cfg.tolerances = {
        k: tuple(v) if isinstance(v, list) else v
        for k, v in dict(raw.get("tolerances", {})).items()
    }
    cfg.output_dir = str(raw.get("output_dir", cfg.output_dir))
    cfg.seed = raw.get("seed")
    cfg.threads = int(raw.get("threads", 1))
    cfg.snapshots_as = raw.get("snapshots_as", "npy")
    if cfg.snapshots_as not in ("npy", "csv"):
        errors.append(("snapshots_as", "must be 'npy' or 'csv'"))
    if "r_list" in raw:
        cfg.r_list = tuple(float(r) for r in raw["r_list"])
    if "variants" in raw:
        cfg.variants = tuple(raw["variants"])
    if cfg.initial_data.get("kind") == "random_bandlimited":
        if cfg.seed is None and "seed" not in cfg.initial_data:
            errors.append(("initial_data.seed", "seed is mandatory for random data"))
        elif "seed" not in cfg.initial_data:
            cfg.initial_data["seed"] = cfg.seed
    prof_path = cfg.coefficients.get("profile_path")
    if prof_path is not None and not os.path.exists(prof_path):
        errors.append(("coefficients.profile_path", f"{prof_path} does not exist"))
    # admissibility precheck on the initial data (skip kappas already flagged)
    valid_kappas = [k for k in kl if k >= 1.0 and grid is not None
                    and k * grid.dx <= 0.5]
    if grid is not None and cfg.experiment in ("conservation", "microlaw") and valid_kappas:
        try:
            u0 = initial_data.from_descriptor(grid, cfg.initial_data)
            for k in valid_kappas:
                floor = greens.admissibility_floor(u0, k)
                if k < floor:
                    errors.append(
                        ("kappa_list",
                         f"kappa = {k} < 1 + 10||u0||^2 = {floor:.3f}: inadmissible")
                    )
        except ValueError as exc:
            errors.append(("initial_data", str(exc)))
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return validate(json.load(fh))
