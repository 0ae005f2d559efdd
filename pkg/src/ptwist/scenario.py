"""Scenario configuration, pipeline orchestration and report emission.

A scenario bundles a boundary twist, a Hamiltonian model and a growth
regime; running it computes the index tables of the linear reference
systems with monodromy and spectral-flow cross-checks, evaluates the
hypothesis battery, searches for twisted-boundary orbits and certifies each
one, and (for the bounded-gradient regime) sweeps the multiplier over
scaled threshold estimates.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import build_space
from .errors import ConfigError, NoSaddleFound, NonstationaryLimit
from .index import LinearSystem, constant_system, default_m_schedule, \
    maslov_p_index, monodromy, nullity_from_monodromy, \
    random_compatible_system, spectral_flow, spectral_flow_table
from .models import HamiltonianModel, builtin_family, check_hypotheses, \
    truncate
from .solver import OrbitSolution, SaddleOptions, assemble, certify, \
    estimate_lambda_tau, find_saddle, linking_split
from .symplectic import PBoundary, rotation_block_matrix, validate_p

DEFAULT_LAMBDA_FACTORS = (1.0, 2.0, 4.0)


# -- configuration parsing ----------------------------------------------------

def _need(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError(f"missing field {path}.{key}")
    return cfg[key]


def boundary_from_config(cfg: dict, path: str = "boundary") -> PBoundary:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path} must be an object")
    tau = _need(cfg, "tau", path)
    k_max = int(cfg.get("k_max", 64))
    if "rotation_angles" in cfg:
        P = rotation_block_matrix(cfg["rotation_angles"])
    elif "matrix" in cfg:
        P = np.asarray(cfg["matrix"], dtype=float)
    else:
        raise ConfigError(
            f"{path} needs either 'rotation_angles' or 'matrix'")
    try:
        return validate_p(P, float(tau), k_max=k_max)
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def model_from_config(cfg: dict, n: int, path: str = "model") -> HamiltonianModel:
    if not isinstance(cfg, dict) or not cfg:
        raise ConfigError(f"{path} must be a non-empty object")
    family = _need(cfg, "family", path)
    params = {k: v for k, v in cfg.items() if k not in ("family", "n")}
    for key in ("h0", "h_inf"):
        if key in params:
            params[key] = np.asarray(params[key], dtype=float)
    try:
        return builtin_family(family, n=int(cfg.get("n", n)), **params)
    except TypeError as exc:
        raise ConfigError(f"{path}: bad parameters for {family!r}: {exc}") \
            from exc


def system_from_spec(pb: PBoundary, spec: dict,
                     path: str = "system") -> LinearSystem:
    """Build a linear system from a config spec.

    Supported forms: {"constant": matrix}, {"constant_scalar": b},
    {"scalar_fourier": {"b0": .., "cos": [..], "sin": [..]}} and
    {"conjugated_random": {"seed": .., "amplitude": ..}}.
    """
    if not isinstance(spec, dict):
        raise ConfigError(f"{path} must be an object")
    label = spec.get("name", "system")
    if "constant" in spec:
        return constant_system(pb, np.asarray(spec["constant"], dtype=float),
                               label=label)
    if "constant_scalar" in spec:
        b = float(spec["constant_scalar"])
        return constant_system(pb, b * np.eye(2 * pb.n), label=label)
    if "scalar_fourier" in spec:
        fam = spec["scalar_fourier"]
        b0 = float(fam.get("b0", 0.0))
        cs = [float(v) for v in fam.get("cos", [])]
        sn = [float(v) for v in fam.get("sin", [])]
        omega = 2 * np.pi / pb.tau
        I = np.eye(2 * pb.n)

        def B(t):
            val = b0
            for p, c in enumerate(cs, start=1):
                val += c * np.cos(p * omega * t)
            for p, s in enumerate(sn, start=1):
                val += s * np.sin(p * omega * t)
            return val * I

        return LinearSystem(pb, B, label=label)
    if "conjugated_random" in spec:
        fam = spec["conjugated_random"]
        rng = np.random.default_rng(int(fam.get("seed", 0)))
        return random_compatible_system(
            pb, rng, amplitude=float(fam.get("amplitude", 0.8)), label=label)
    raise ConfigError(f"{path}: unknown system spec {sorted(spec)}")


@dataclass(frozen=True)
class Scenario:
    pb: PBoundary
    model: HamiltonianModel | None
    regime: str | None
    m_schedule: list
    seed: int
    solve: dict | None
    systems: list
    raw: dict = field(default_factory=dict)


_REGIMES = ("superquadratic", "asymptotically_linear_deg",
            "asymptotically_linear", "subquadratic")


def scenario_from_config(cfg: dict) -> Scenario:
    if not isinstance(cfg, dict):
        raise ConfigError("top-level config must be an object")
    pb = boundary_from_config(_need(cfg, "boundary", "config"))
    model = None
    regime = None
    if cfg.get("model") is not None:
        model = model_from_config(cfg["model"], pb.n)
        regime = cfg.get("regime")
        if regime not in _REGIMES:
            raise ConfigError(
                f"config.regime must be one of {_REGIMES}, got {regime!r}")
        if regime in ("asymptotically_linear", "asymptotically_linear_deg") \
                and model.h_inf is None:
            raise ConfigError("config.model: asymptotically linear regimes "
                              "need h_inf")
        if regime == "subquadratic" and model.M_bound is None:
            raise ConfigError("config.model: subquadratic regime needs a "
                              "bounded gradient")
    elif cfg.get("solve"):
        raise ConfigError("config.model: a solve run needs a model")
    m_schedule = cfg.get("m_schedule") or default_m_schedule(pb)
    solve = cfg.get("solve")
    if solve is not None and not isinstance(solve, dict):
        raise ConfigError("config.solve must be an object or null")
    systems = cfg.get("systems", [])
    return Scenario(pb=pb, model=model, regime=regime,
                    m_schedule=[int(m) for m in m_schedule],
                    seed=int(cfg.get("seed", 0)), solve=solve,
                    systems=list(systems), raw=cfg)


# -- report -------------------------------------------------------------------

@dataclass
class RunReport:
    data: dict
    orbits: list = field(default_factory=list)
    flow_tables: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.data), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def _index_entry(sys: LinearSystem, sc: Scenario, spaces: dict,
                 flow_steps: int = 64) -> dict:
    pair = maslov_p_index(sys, m_schedule=sc.m_schedule, spaces=spaces)
    gamma = monodromy(sys)
    nu_ode = nullity_from_monodromy(gamma, sc.pb)
    small = spaces[min(spaces)]
    flow = spectral_flow(sys, small)
    return {
        "label": sys.label,
        "i_p": pair.i_p,
        "nu_p": pair.nu_p,
        "stabilized": pair.stabilized,
        "d": pair.provenance["d"],
        "m_schedule": sc.m_schedule,
        "checks": {
            "nullity_ode": nu_ode,
            "spectral_flow": flow,
            "nullity_agrees": nu_ode == pair.nu_p,
            "flow_agrees": flow == pair.i_p,
        },
    }


def _orbit_entry(i: int, sol: OrbitSolution) -> dict:
    cert = sol.certificate or {}
    pr = sol.period_report
    return {
        "orbit_id": i,
        "kind": sol.kind,
        "lam_mult": sol.lam_mult,
        "m": sol.space.m,
        "action": sol.action,
        "grad_norm": sol.grad_norm,
        "ode_residual": sol.ode_residual,
        "boundary_defect": sol.boundary_defect,
        "is_constant": sol.is_constant,
        "i_p": sol.index_pair.i_p if sol.index_pair else None,
        "nu_p": sol.index_pair.nu_p if sol.index_pair else None,
        "T_min": pr.t_min if pr else None,
        "T_psym": pr.t_psym if pr else None,
        "branch": pr.dichotomy_branch if pr else None,
        "period_report": pr.as_dict() if pr else None,
        "certificate": cert,
        "theorem_compliant": cert.get("theorem_compliant"),
        "coeffs": sol.coeffs,
        "continuation": [list(row) for row in sol.continuation],
    }


def _solve_options(sc: Scenario) -> SaddleOptions:
    s = sc.solve or {}
    return SaddleOptions(
        alpha_min=s.get("alpha_min"),
        max_starts=int(s.get("max_starts", 64)),
        seed=sc.seed,
        n_samples=int(s.get("n_samples", 512)),
        continuation_steps=int(s.get("continuation_steps", 0)),
    )


def _default_truncation_radius(model: HamiltonianModel) -> float:
    scale = max(1.0, float(model.R0 or 1.0))
    if model.h0 is not None and model.h0.size:
        scale = max(scale, float(np.linalg.norm(model.h0, 2)))
    return 4.0 * scale


def run_scenario(sc: Scenario) -> RunReport:
    """Run the full pipeline for one scenario; deterministic given the seed."""
    t0 = time.perf_counter()
    timings = {}
    pb = sc.pb
    data = {
        "boundary": {
            "n": pb.n, "k": pb.k, "tau": pb.tau,
            "dim_ker": pb.dim_ker,
            "angles": pb.angles if pb.angles is not None else None,
        },
        "seed": sc.seed,
        "m_schedule": sc.m_schedule,
        "regime": sc.regime,
    }
    report = RunReport(data=data)

    # index tables and cross-checks
    t1 = time.perf_counter()
    spaces: dict = {}
    tables = {}
    index_ctx = {}
    zero = constant_system(pb, np.zeros((2 * pb.n,) * 2), label="zero")
    tables["zero"] = _index_entry(zero, sc, spaces)
    report.flow_tables["zero"] = spectral_flow_table(zero,
                                                     spaces[min(spaces)])
    if sc.model is not None and sc.model.h0 is not None:
        h0_sys = constant_system(pb, sc.model.h0, label="h0")
        tables["h0"] = _index_entry(h0_sys, sc, spaces)
        index_ctx["h0"] = (tables["h0"]["i_p"], tables["h0"]["nu_p"])
        report.flow_tables["h0"] = spectral_flow_table(h0_sys,
                                                       spaces[min(spaces)])
    if sc.model is not None and sc.model.h_inf is not None:
        hi_sys = constant_system(pb, sc.model.h_inf, label="h_inf")
        tables["h_inf"] = _index_entry(hi_sys, sc, spaces)
        index_ctx["h_inf"] = (tables["h_inf"]["i_p"], tables["h_inf"]["nu_p"])
        report.flow_tables["h_inf"] = spectral_flow_table(hi_sys,
                                                          spaces[min(spaces)])
    for i, spec in enumerate(sc.systems):
        sys = system_from_spec(pb, spec, path=f"config.systems[{i}]")
        tables[sys.label] = _index_entry(sys, sc, spaces)
    data["index_tables"] = tables
    timings["indices_s"] = time.perf_counter() - t1

    if sc.model is not None:
        t1 = time.perf_counter()
        hyp = check_hypotheses(sc.model, pb, index_ctx=index_ctx,
                               seed=sc.seed)
        data["hypotheses"] = hyp.as_dict()
        timings["hypotheses_s"] = time.perf_counter() - t1

    data["orbits"] = []
    data["errors"] = []
    if sc.solve is not None and sc.model is not None:
        t1 = time.perf_counter()
        try:
            _run_solve(sc, report, index_ctx)
        except (NoSaddleFound, NonstationaryLimit) as exc:
            data["errors"].append({"stage": "solve",
                                   "error": type(exc).__name__,
                                   "message": str(exc)})
        timings["solve_s"] = time.perf_counter() - t1

    data["certified_orbit_ids"] = [
        e["orbit_id"] for e in data["orbits"] if e.get("theorem_compliant")]
    timings["total_s"] = time.perf_counter() - t0
    data["timings"] = timings
    return report


def _run_solve(sc: Scenario, report: RunReport, index_ctx: dict):
    pb = sc.pb
    model = sc.model
    opts = _solve_options(sc)
    solve_cfg = sc.solve or {}
    m = int(solve_cfg.get("m", sc.m_schedule[0] + sc.m_schedule[0] % 2))
    space = build_space(pb, m)
    data = report.data

    if sc.regime == "subquadratic":
        lam_tau = estimate_lambda_tau(pb, model, space, seed=sc.seed)
        factors = [float(f) for f in solve_cfg.get(
            "lambda_factors", DEFAULT_LAMBDA_FACTORS)]
        data["lambda_tau"] = lam_tau
        sweep = []
        split = linking_split(space, np.zeros((2 * pb.n,) * 2))
        g_split = (split[1], split[0])  # descent on positive modes
        for fac in factors:
            lam = fac * lam_tau
            entry = {"factor": fac, "lambda": lam, "orbits": []}
            rf = assemble(space, model, "action_g", lam=lam)
            try:
                sols = find_saddle(rf, g_split, opts)
            except (NoSaddleFound, NonstationaryLimit) as exc:
                entry["error"] = type(exc).__name__
                entry["message"] = str(exc)
                sweep.append(entry)
                continue
            for sol in sols:
                cert = certify(sol, pb, model, regime="subquadratic",
                               m_schedule=sc.m_schedule,
                               index_ctx=dict(index_ctx))
                idx = len(report.orbits)
                report.orbits.append(cert)
                data["orbits"].append(_orbit_entry(idx, cert))
                entry["orbits"].append(idx)
            sweep.append(entry)
        data["lambda_sweep"] = sweep
        return

    if sc.regime == "superquadratic":
        K = float(solve_cfg.get("truncation_K",
                                _default_truncation_radius(model)))
        for _ in range(5):
            work = truncate(model, K)
            sols = _solve_f(sc, work, space, opts, index_ctx,
                            split_matrix=work.h0)
            sup = max((s.certificate["sup_x"] for s in sols), default=0.0)
            if sup < K:
                break
            K *= 2.0
        data["truncation"] = {"K": K, "R_K": work.truncation["R_K"]}
    else:
        if sc.regime == "asymptotically_linear" and opts.alpha_min is None:
            # the minimax level for this regime is bounded below by a
            # negative constant, so orbits may carry negative action; the
            # trivial point is still excluded by the constancy test
            opts = replace(opts, alpha_min=-np.inf)
        split_h = model.h_inf if sc.regime == "asymptotically_linear" \
            else model.h0
        sols = _solve_f(sc, model, space, opts, index_ctx,
                        split_matrix=split_h)

    for sol in sols:
        idx = len(report.orbits)
        report.orbits.append(sol)
        data["orbits"].append(_orbit_entry(idx, sol))


def _solve_f(sc: Scenario, model: HamiltonianModel, space, opts,
             index_ctx: dict, split_matrix=None):
    pb = sc.pb
    h = split_matrix if split_matrix is not None \
        else np.zeros((2 * pb.n,) * 2)
    split = linking_split(space, h)
    rf = assemble(space, model, "action_f")
    sols = find_saddle(rf, split, opts)
    return [certify(s, pb, model, regime=sc.regime,
                    m_schedule=sc.m_schedule, index_ctx=dict(index_ctx))
            for s in sols]


# -- emission -----------------------------------------------------------------

def emit(report: RunReport, out_dir, render_figures: bool = True) -> list:
    """Write report.json, CSV artifacts and (optionally) figures.

    Returns the list of written paths.  CSV layouts: indices.csv one row per
    linear system; orbits/orbit_NN.csv columns t, x_1..x_2n; plotdata CSVs
    carry the eigenvalue flows (one row per eigenvalue per grid point) and
    the action continuation trail.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []

    p = os.path.join(out_dir, "report.json")
    with open(p, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    paths.append(p)

    p = os.path.join(out_dir, "indices.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "i_p", "nu_p", "d", "stabilized",
                    "nullity_ode", "spectral_flow"])
        for label, entry in report.data.get("index_tables", {}).items():
            w.writerow([label, entry["i_p"], entry["nu_p"],
                        f"{entry['d']:.6e}", entry["stabilized"],
                        entry["checks"]["nullity_ode"],
                        entry["checks"]["spectral_flow"]])
    paths.append(p)

    orbit_dir = os.path.join(out_dir, "orbits")
    plot_dir = os.path.join(out_dir, "plotdata")
    os.makedirs(orbit_dir, exist_ok=True)
    os.makedirs(plot_dir, exist_ok=True)

    for i, sol in enumerate(report.orbits):
        p = os.path.join(orbit_dir, f"orbit_{i:02d}.csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x_{j + 1}" for j in range(sol.xs.shape[1])])
            for t, row in zip(sol.ts, sol.xs):
                w.writerow([f"{t:.12g}"] + [f"{v:.12g}" for v in row])
        paths.append(p)

    p = os.path.join(plot_dir, "action_vs_m.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["orbit_id", "m", "action", "grad_norm", "ode_residual"])
        for i, sol in enumerate(report.orbits):
            trail = sol.continuation or ((sol.space.m, sol.action,
                                          sol.grad_norm, sol.ode_residual),)
            for m_val, action, gn, res in trail:
                w.writerow([i, m_val, f"{action:.12g}", f"{gn:.3e}",
                            f"{res:.3e}"])
    paths.append(p)

    for label, table in report.flow_tables.items():
        p = os.path.join(plot_dir, f"eigflow_{label}.csv")
        steps_plus_1, dim = table.shape
        grid = np.linspace(0.0, 1.0, steps_plus_1)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eig_index", "s", "value"])
            for j in range(dim):
                for s, val in zip(grid, table[:, j]):
                    w.writerow([j, f"{s:.8g}", f"{val:.12g}"])
        paths.append(p)

    if render_figures:
        from .plots import render_report

        paths.extend(render_report(report, out_dir))
    return paths
