"""Experiment orchestration: dispatch, persistence, summaries, reports."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, greens, initial_data, opnorms, smoothing
from .config import RunConfig, coefficients_from_descriptor
from .grid import RealField, make_grid
from .spectral import l2_norm, sobolev_kappa_norm


@dataclass
class RunSummary:
    config_hash: str
    experiment: str
    passes: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    outputs: list = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(self.passes.values())

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "experiment": self.experiment,
            "passes": self.passes,
            "metrics": self.metrics,
            "wall_time_s": self.wall_time_s,
            "outputs": self.outputs,
            "error": self.error,
            "ok": self.ok,
        }

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "RunSummary":
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            config_hash=d["config_hash"], experiment=d["experiment"],
            passes=d["passes"], metrics=d["metrics"],
            wall_time_s=d["wall_time_s"], outputs=d["outputs"],
            error=d.get("error"),
        )


def _write_columns(path: str, names, columns):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(*columns):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _run_conservation(cfg: RunConfig, outdir: str, summary: RunSummary):
    grid = make_grid(cfg.length_L, cfg.points_N)
    u0 = initial_data.from_descriptor(grid, cfg.initial_data)
    coeffs = coefficients_from_descriptor(grid, cfg.coefficients)
    traj = dynamics.solve(
        u0, cfg.time_T, dt=cfg.dt, coeffs=coeffs,
        save_every=cfg.save_every, kappa_list=cfg.kappa_list,
    )
    prefix = os.path.join(outdir, "trajectory")
    traj.save(prefix, snapshots_as=cfg.snapshots_as)
    summary.outputs += [f"{prefix}_header.json", f"{prefix}_diagnostics.csv"]
    drift_max = {}
    for k in cfg.kappa_list:
        drift = dynamics.alpha_drift(traj, k)
        drift_max[k] = float(np.max(drift))
        _write_columns(
            os.path.join(outdir, f"alpha_drift_kappa{k:g}.txt"),
            ["t", "relative_drift"], [traj.times, drift],
        )
    resid = dynamics.l2_identity_residual(traj, coeffs)
    summary.metrics["alpha_drift_max"] = drift_max
    summary.metrics["l2_residual_max"] = float(np.max(resid)) if len(resid) else 0.0
    summary.metrics["mass_drift"] = float(
        abs(traj.records[-1].mass - traj.records[0].mass)
    )
    tol_l2 = (
        cfg.tolerance("l2_residual_kdv")
        if coeffs.is_zero
        else cfg.tolerance("l2_residual_forced")
    )
    summary.passes["alpha_drift"] = all(
        v <= cfg.tolerance("alpha_drift") for v in drift_max.values()
    )
    summary.passes["l2_identity"] = summary.metrics["l2_residual_max"] <= tol_l2


def _run_microlaw(cfg: RunConfig, outdir: str, summary: RunSummary):
    grid = make_grid(cfg.length_L, cfg.points_N)
    u = initial_data.from_descriptor(grid, cfg.initial_data)
    coeffs = coefficients_from_descriptor(grid, cfg.coefficients)
    k = cfg.kappa_list[0]
    r_coarse = greens.microlaw_residual(u, k, coeffs)
    fine = make_grid(cfg.length_L, 2 * cfg.points_N)
    u_fine = initial_data.from_descriptor(fine, cfg.initial_data)
    coeffs_fine = coefficients_from_descriptor(fine, cfg.coefficients)
    r_fine = greens.microlaw_residual(u_fine, k, coeffs_fine)
    summary.metrics["residual"] = r_coarse
    summary.metrics["residual_refined"] = r_fine
    summary.metrics["refinement_factor"] = r_coarse / max(r_fine, 1e-300)
    summary.passes["residual"] = r_coarse <= cfg.tolerance("microlaw")
    summary.passes["refinement"] = (
        summary.metrics["refinement_factor"] >= cfg.tolerance("microlaw_refinement_factor")
    )
    gd = greens.rho_alpha(u, k)
    gd.save(os.path.join(outdir, "greens_data"))
    summary.outputs.append(os.path.join(outdir, "greens_data.txt"))


def _run_operator_scaling(cfg: RunConfig, outdir: str, summary: RunSummary):
    kappas = cfg.kappa_list if len(cfg.kappa_list) >= 4 else (2.0, 4.0, 8.0, 16.0)
    for variant in cfg.variants:
        rep = opnorms.commutator_scaling_audit(
            variant=variant, kappa_list=kappas, length=cfg.length_L
        )
        path = os.path.join(outdir, f"scaling_{variant}.json")
        with open(path, "w") as fh:
            fh.write(rep.to_json())
        summary.outputs.append(path)
        summary.metrics[f"slope_{variant}"] = rep.fitted_slope
        summary.metrics[f"ci_{variant}"] = rep.slope_ci
        if variant == "plain":
            target, width = cfg.tolerance("slope_plain")
            okay = abs(rep.fitted_slope - target) <= width
        elif variant == "with_derivative":
            target, width = cfg.tolerance("slope_with_derivative")
            okay = abs(rep.fitted_slope - target) <= width
        elif variant == "double":
            okay = rep.fitted_slope <= cfg.tolerance("slope_double_max")
        else:
            okay = True
        summary.passes[f"slope_{variant}"] = bool(okay and rep.ok)


def _run_apriori_sweep(cfg: RunConfig, outdir: str, summary: RunSummary):
    grid = make_grid(cfg.length_L, cfg.points_N)
    coeffs = coefficients_from_descriptor(grid, cfg.coefficients)
    run_grid = coeffs.grid  # bottom coefficients live on the stretched grid
    wf = smoothing.WeightFamily(run_grid)
    eps = smoothing.hypothesis_check(coeffs, mode="pointwise").epsilon()
    horizons, sup_ok, records = [], [], []
    seed = cfg.seed if cfg.seed is not None else 0
    for r in cfg.r_list:
        kappa = 1.0 + 10.0 * r * r
        u0 = initial_data.random_bandlimited(run_grid, kappa, r, seed)
        t_cap = min(cfg.time_T, 1.0 / kappa**2)
        traj = dynamics.solve(u0, t_cap, dt=cfg.dt, coeffs=coeffs,
                              save_every=cfg.save_every)
        sup_factor = cfg.tolerance("sup_norm_factor")
        horizon = t_cap
        ok = True
        for t, u in zip(traj.times, traj.snapshots):
            nrm = sobolev_kappa_norm(u, -1.0, kappa)
            if nrm > sup_factor * r:
                horizon = float(t)
                ok = False
                break
        rec = smoothing.bootstrap_audit(traj, kappa, r, eps, weights=wf)
        records.append(rec)
        horizons.append(horizon)
        sup_ok.append(ok)
    slope = float(
        np.polyfit(np.log(cfg.r_list), np.log(horizons), 1)[0]
    )
    _write_columns(
        os.path.join(outdir, "horizon_vs_R.txt"),
        ["R", "horizon"], [np.array(cfg.r_list), np.array(horizons)],
    )
    summary.outputs.append(os.path.join(outdir, "horizon_vs_R.txt"))
    summary.metrics["horizon_slope_vs_R"] = slope
    summary.metrics["epsilon_measured"] = eps
    summary.metrics["bootstrap"] = [rec.as_dict() for rec in records]
    summary.passes["sup_norm_bounded"] = all(sup_ok)
    summary.passes["b_t_finite"] = all(
        np.isfinite(rec.b_t) for rec in records
    )


def _run_bottom_roundtrip(cfg: RunConfig, outdir: str, summary: RunSummary):
    from . import bottom as bt

    grid = make_grid(cfg.length_L, cfg.points_N)
    desc = cfg.coefficients.get("profile", {"kind": "sech2", "amplitude": 0.05, "width": 3.0})
    profile = bt.profile_from_descriptor(grid, desc)
    coeffs = bt.synth_coefficients(profile)
    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    v = initial_data.gaussian_bump(profile.y_grid, 0.3, 2.5)
    rt = bt.transform_backward(bt.transform_forward(v, 0.3, profile), 0.3, profile)
    rt_err = l2_norm(RealField(profile.y_grid, rt.samples - v.samples)) / l2_norm(v)
    summary.metrics["roundtrip_error"] = rt_err
    summary.passes["roundtrip"] = rt_err <= cfg.tolerance("roundtrip")
    # flat bottom: all synthesized coefficients vanish
    flat = bt.profile_from_descriptor(grid, {"kind": "flat", "amplitude": 0.0})
    cflat = bt.synth_coefficients(flat)
    worst = 0.0
    for name in ("a2", "a3", "a4"):
        f = getattr(cflat, name)(0.0)
        if f is not None:
            worst = max(worst, f.max_abs())
    summary.metrics["flat_coefficient_max"] = worst
    summary.passes["flat_coefficients_vanish"] = worst <= cfg.tolerance("coefficient_vanish")
    # dynamics equivalence
    u0 = bt.transform_forward(v, 0.0, profile)
    traj_u = bt.solve_kdvvb(u0, cfg.time_T, profile, dt=cfg.dt)
    traj_v = dynamics.solve(v, cfg.time_T, dt=cfg.dt, coeffs=coeffs)
    u_from_v = bt.transform_forward(traj_v.final, cfg.time_T, profile)
    eq_err = l2_norm(
        RealField(grid, traj_u.final.samples - u_from_v.samples)
    ) / l2_norm(u_from_v)
    summary.metrics["equivalence_error"] = eq_err
    summary.passes["dynamics_equivalence"] = eq_err <= cfg.tolerance("equivalence")
    cols = [coeffs.a2(0.0).samples, coeffs.a3(0.0).samples, coeffs.a4(0.0).samples]
    _write_columns(
        os.path.join(outdir, "synth_coefficients.csv"),
        ["y", "a2", "a3", "a4"], [profile.y_grid.x] + cols,
    )
    summary.outputs.append(os.path.join(outdir, "synth_coefficients.csv"))


_DISPATCH = {
    "conservation": _run_conservation,
    "microlaw": _run_microlaw,
    "operator_scaling": _run_operator_scaling,
    "apriori_sweep": _run_apriori_sweep,
    "bottom_roundtrip": _run_bottom_roundtrip,
}


def run(cfg: RunConfig) -> RunSummary:
    """Execute one experiment; never raises, failures land in the summary."""
    outdir = os.path.join(cfg.output_dir, f"{cfg.experiment}_{cfg.config_hash}")
    os.makedirs(outdir, exist_ok=True)
    summary = RunSummary(config_hash=cfg.config_hash, experiment=cfg.experiment)
    t0 = time.time()
    try:
        _DISPATCH[cfg.experiment](cfg, outdir, summary)
    except Exception as exc:  # noqa: BLE001 - captured into the summary
        summary.error = f"{type(exc).__name__}: {exc}"
    summary.wall_time_s = time.time() - t0
    with open(os.path.join(outdir, "config.json"), "w") as fh:
        fh.write(cfg.canonical_json())
    summary.save(os.path.join(outdir, "summary.json"))
    summary.outputs.append(os.path.join(outdir, "summary.json"))
    return summary


def report(summaries: list) -> tuple[str, dict, int]:
    """Aggregate summaries into a text table and a JSON index.

    Returns (table, index, exit_status); stable column order, rows sorted
    by config hash.
    """
    if not summaries:
        raise ValueError("report needs at least one summary")
    rows = sorted(summaries, key=lambda s: s.config_hash)
    lines = [f"{'hash':14s} {'experiment':18s} {'ok':4s} checks"]
    for s in rows:
        checks = ",".join(f"{k}={'P' if v else 'F'}" for k, v in sorted(s.passes.items()))
        if s.error:
            checks = f"error: {s.error}"
        lines.append(f"{s.config_hash:14s} {s.experiment:18s} "
                     f"{'ok' if s.ok else 'FAIL':4s} {checks}")
    index = {
        "runs": [s.to_dict() for s in rows],
        "all_ok": all(s.ok for s in rows),
    }
    status = 0 if index["all_ok"] else 1
    return "\n".join(lines), index, status


def sweep(cfg: RunConfig, param: str, values, threads: int | None = None) -> list:
    """Run cfg once per value of a dotted config key, in a worker pool."""
    import copy
    from .config import validate
    import json as _json

    base = _json.loads(cfg.canonical_json())
    configs = []
    for v in values:
        d = copy.deepcopy(base)
        node = d
        *parents, leaf = param.split(".")
        for p in parents:
            node = node[p]
        node[leaf] = v
        configs.append(validate(d))
    nthreads = threads or cfg.threads or 1
    with ThreadPoolExecutor(max_workers=nthreads) as pool:
        out = list(pool.map(run, configs))
    return sorted(out, key=lambda s: s.config_hash)
