"""Config-driven experiment runner: ``dnp-steady run|validate|suite``.

Experiments are described by TOML files with [mesh], [operator], [source],
optional [band] and [run] sections; coefficients and state laws are tiny
arithmetic expressions over x, y and s.  A run writes ``report.json`` (all
residuals, extremal-solution summaries, gap tables and check verdicts; no
wall-clock content, so identical seeds give byte-identical reports),
``timing.json`` (wall times only), ``fields.csv`` (nodal values) and
self-contained SVG plots under ``plots/``.

Exit codes: 0 all assertions passed, 1 an assertion failed, 2 config error,
3 numeric/structural failure inside a solve.
"""

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .discretization import build_mesh, constant_field
from .expressions import ExpressionError, parse_expression
from .flux_ops import (check_structure, max_exponent_callable,
                       maxform_operator, multiphase_operator)
from .rothe import rothe_evolve
from .solver import SolverNumericError, gamma_convergence_study
from .sources import (SourceConstructionError, allee_source, check_hypotheses,
                      logistic_source, make_source, signomial_source,
                      symmetric_sine_source, truncate_source)
from .steady_state import (MonotonicityError, compute_extremal_solutions,
                           constant_solution_analysis,
                           uniqueness_diagnostics, verify_solution)
from .varexp_core import ExponentField, check_modular_relations

__all__ = ["ConfigError", "ExperimentConfig", "validate_config",
           "run_experiment", "main"]

_MODES = ("steady", "band_steady", "gamma_study", "rothe", "property_suite")


class ConfigError(ValueError):
    """Configuration file is missing, malformed, or semantically invalid."""


@dataclass
class ExperimentConfig:
    path: str
    raw: dict
    mesh: object
    op: object
    p: object
    src: object
    band: tuple
    mode: str
    seed: int
    out: str
    params: dict = field(default_factory=dict)


def _load_toml(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from exc


def _section(raw, name, required=True):
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _coefficient(value, dim, where):
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return parse_expression(value).as_coefficient(dim)
        except ExpressionError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: expected a number or expression string")


def _profile(value, dim, where):
    if isinstance(value, (int, float)):
        v = float(value)
        return lambda pts, s: np.full_like(np.asarray(s, dtype=float), v)
    if isinstance(value, str):
        try:
            return parse_expression(value).as_profile(dim)
        except ExpressionError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: expected a number or expression string")


def _build_mesh(raw):
    sec = _section(raw, "mesh")
    kind = sec.get("kind")
    try:
        if kind == "interval":
            return build_mesh({"kind": "interval", "n": sec["n"],
                               "length": sec.get("length", 1.0)})
        if kind == "rectangle":
            return build_mesh({"kind": "rectangle", "nx": sec["nx"],
                               "ny": sec["ny"], "lx": sec.get("lx", 1.0),
                               "ly": sec.get("ly", 1.0)})
    except KeyError as exc:
        raise ConfigError(f"[mesh]: missing field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[mesh]: {exc}") from exc
    raise ConfigError(f"[mesh]: unknown kind {kind!r} "
                      "(expected 'interval' or 'rectangle')")


def _build_operator(raw, mesh):
    sec = _section(raw, "operator")
    kind = sec.get("kind")
    dim = mesh.dim
    if kind == "multiphase":
        weights = sec.get("weights")
        exponents = sec.get("exponents")
        if not isinstance(weights, list) or not isinstance(exponents, list):
            raise ConfigError(
                "[operator]: multiphase needs 'weights' and 'exponents' lists")
        w_fns = [_coefficient(w, dim, f"[operator].weights[{i}]")
                 for i, w in enumerate(weights)]
        e_fns = [_coefficient(e, dim, f"[operator].exponents[{i}]")
                 for i, e in enumerate(exponents)]
        try:
            op = multiphase_operator(w_fns, e_fns, sample_points=mesh.coords)
        except ValueError as exc:
            raise ConfigError(f"[operator]: {exc}") from exc
        p = ExponentField.from_callable(max_exponent_callable(e_fns), mesh)
        return op, p
    if kind == "maxform":
        try:
            h = _profile(sec["h"], dim, "[operator].h")
            a = _profile(sec["a"], dim, "[operator].a")
            a_tilde = _coefficient(sec.get("a_tilde", 0.0), dim,
                                   "[operator].a_tilde")
            p_coef = _coefficient(sec["p"], dim, "[operator].p")
        except KeyError as exc:
            raise ConfigError(f"[operator]: missing field {exc}") from exc
        try:
            op = maxform_operator(h, a, a_tilde, p_coef,
                                  sample_points=mesh.coords)
            p = ExponentField.from_callable(
                p_coef if callable(p_coef)
                else (lambda pts: np.full(np.shape(pts)[0], p_coef)), mesh)
        except ValueError as exc:
            raise ConfigError(f"[operator]: {exc}") from exc
        return op, p
    raise ConfigError(f"[operator]: unknown kind {kind!r} "
                      "(expected 'multiphase' or 'maxform')")


def _build_source(raw, mesh):
    sec = _section(raw, "source")
    kind = sec.get("kind")
    dim = mesh.dim
    lambda0 = sec.get("lambda0")
    try:
        if kind == "logistic":
            return logistic_source(sample_points=mesh.coords)
        if kind == "allee":
            return allee_source(threshold=sec.get("threshold", 0.25),
                                sample_points=mesh.coords)
        if kind == "symmetric":
            return symmetric_sine_source(sample_points=mesh.coords)
        if kind == "custom":
            f = _profile(sec["f"], dim, "[source].f")
            b = _profile(sec.get("b", "s"), dim, "[source].b")
            return make_source(f, b, float(sec["delta0"]), lambda0,
                               x_independent=bool(sec.get("x_independent",
                                                          False)),
                               sample_points=mesh.coords)
        if kind == "signomial":
            a_coefs = [_coefficient(v, dim, "[source].a")
                       for v in sec["a"]]
            b_coefs = [_coefficient(v, dim, "[source].b_coefs")
                       for v in sec["b_coefs"]]
            c = _coefficient(sec.get("c", 0.0), dim, "[source].c")
            q_exps = [_coefficient(v, dim, "[source].q") for v in sec["q"]]
            r_exps = [_coefficient(v, dim, "[source].r") for v in sec["r"]]
            b = _profile(sec.get("capacity", "s"), dim, "[source].capacity")
            src, _, _ = signomial_source(
                a_coefs, b_coefs, c, q_exps, r_exps, float(sec["alpha"]), b,
                delta0_hint=sec.get("delta0_hint"),
                sample_points=mesh.coords)
            return src
    except KeyError as exc:
        raise ConfigError(f"[source]: missing field {exc}") from exc
    except (SourceConstructionError, ValueError) as exc:
        raise ConfigError(f"[source]: {exc}") from exc
    raise ConfigError(
        f"[source]: unknown kind {kind!r} (expected logistic, allee, "
        "symmetric, signomial or custom)")


def validate_config(path):
    """Parse, build and cross-check a config file; all checks run eagerly."""
    raw = _load_toml(path)
    mesh = _build_mesh(raw)
    op, p = _build_operator(raw, mesh)
    src = _build_source(raw, mesh)

    run = _section(raw, "run")
    mode = run.get("mode")
    if mode not in _MODES:
        raise ConfigError(f"[run]: unknown mode {mode!r}; expected one "
                          f"of {_MODES}")
    seed = int(run.get("seed", 0))
    out = str(run.get("out", "out"))

    band = (0.0, src.delta0)
    band_sec = _section(raw, "band", required=False)
    if band_sec:
        try:
            eps = float(band_sec["eps"])
            delta = float(band_sec["delta"])
        except KeyError as exc:
            raise ConfigError(f"[band]: missing field {exc}") from exc
        try:
            truncate_source(src, eps, delta, sample_points=mesh.coords)
        except ValueError as exc:
            raise ConfigError(f"[band]: {exc}") from exc
        band = (eps, delta)
    elif mode == "band_steady":
        raise ConfigError("[band]: band_steady mode needs a [band] section")

    params = {
        "tol": float(run.get("tol", 1e-8)),
        "max_iters": int(run.get("max_iters", 10000)),
        "trials": int(run.get("trials", 200)),
        "eps_list": [float(e) for e in run.get(
            "eps_list", [1e-1, 1e-2, 1e-3, 1e-4])],
        "tau": float(run.get("tau", 0.1)),
        "n_steps": int(run.get("n_steps", 50)),
        "u0": run.get("u0", 0.5 * src.delta0),
        "u0_companion": run.get("u0_companion"),
        "g_state": float(run.get("g_state", 0.5 * src.delta0)),
        "residual_tol": float(run.get("residual_tol", 1e-6)),
    }
    numeric = [params["tol"], params["tau"], params["g_state"],
               params["residual_tol"]] + params["eps_list"] + list(band)
    if isinstance(params["u0"], (int, float)):
        numeric.append(float(params["u0"]))
    if any(not np.isfinite(v) for v in numeric):
        raise ConfigError("[run]: all numeric fields must be finite")
    if mode == "rothe":
        tau = params["tau"]
        if tau <= 0:
            raise ConfigError("[run]: tau must be positive")
        if 1.0 / tau < src.lambda0:
            raise ConfigError(
                f"[run]: time step too large: 1/tau = {1.0 / tau:.6g} is "
                f"below the source monotonicity constant "
                f"lambda0 = {src.lambda0:.6g}; admissible right sides need "
                f"lam >= lambda0")
    if mode == "gamma_study":
        el = params["eps_list"]
        if any(e <= 0 for e in el) or any(b >= a for a, b in zip(el, el[1:])):
            raise ConfigError(
                "[run]: eps_list must be positive and strictly decreasing")
    return ExperimentConfig(path=str(path), raw=raw, mesh=mesh, op=op, p=p,
                            src=src, band=band, mode=mode, seed=seed,
                            out=out, params=params)


def _state_field(mesh, value, dim, where):
    if isinstance(value, (int, float)):
        return constant_field(mesh, float(value))
    fn = _profile(value, dim, where)
    return np.asarray(fn(mesh.coords, np.zeros(mesh.n_nodes)), dtype=float)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            raise ValueError("report would contain a non-finite number")
        return v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (str, bool)) or obj is None:
        return obj
    raise TypeError(f"cannot serialize {type(obj)} into the report")


def _assert_entry(assertions, name, passed, detail):
    assertions.append({"name": name, "passed": bool(passed),
                       "detail": detail})


def _plot_profiles(mesh, fields, path, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    if mesh.dim == 1:
        x = mesh.coords[:, 0]
        for name, u in fields.items():
            ax.plot(x, u, label=name)
        ax.set_xlabel("x")
        ax.legend()
    else:
        name, u = next(iter(fields.items()))
        tpc = ax.tripcolor(mesh.coords[:, 0], mesh.coords[:, 1],
                           mesh.elems, u, shading="gouraud")
        fig.colorbar(tpc, ax=ax, label=name)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _plot_decay(series, path, title, xlabel, ylabel, loglog=False):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (xs, ys) in series.items():
        ys = np.maximum(np.asarray(ys, dtype=float), 1e-300)
        if loglog:
            ax.loglog(xs, ys, marker="o", label=name)
        else:
            ax.semilogy(xs, ys, marker="o", label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _write_fields_csv(path, mesh, fields):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "x", "y", "value", "field"])
        for name, u in fields.items():
            for i in range(mesh.n_nodes):
                x = mesh.coords[i, 0]
                y = mesh.coords[i, 1] if mesh.dim > 1 else 0.0
                writer.writerow([i, repr(float(x)), repr(float(y)),
                                 repr(float(u[i])), name])


def _run_steady(cfg, band, assertions, results, fields, plots):
    mesh, op, p = cfg.mesh, cfg.op, cfg.p
    src = cfg.src
    if band != (0.0, src.delta0):
        src = truncate_source(src, band[0], band[1],
                              sample_points=mesh.coords)
    tol = cfg.params["tol"]
    U_min, U_max, unique, (tr_lo, tr_hi) = compute_extremal_solutions(
        mesh, op, p, src, band=band, tol=tol)
    fields["U_min"] = U_min
    fields["U_max"] = U_max
    for name, U, trace in (("minimal", U_min, tr_lo),
                           ("maximal", U_max, tr_hi)):
        rep = verify_solution(mesh, op, p, src, U, band=band)
        results[f"{name}_state"] = {
            "min_value": float(np.min(U)),
            "max_value": float(np.max(U)),
            "weak_residual_sup": rep.weak_residual_sup,
            "mean_zero_defect": rep.mean_zero_defect,
            "band_violation": rep.band_violation,
            "iterations": trace.n_iters,
            "sup_diffs": trace.sup_diffs,
        }
        _assert_entry(assertions, f"{name}_iteration_converged",
                      trace.converged, f"{trace.n_iters} iterations")
        _assert_entry(
            assertions, f"{name}_mean_zero",
            rep.mean_zero_ok(mesh.volume),
            f"defect {rep.mean_zero_defect:.3e} vs "
            f"{1e-6 * mesh.volume * rep.max_abs_f:.3e}")
        _assert_entry(assertions, f"{name}_weak_residual",
                      rep.weak_residual_sup <= cfg.params["residual_tol"],
                      f"sup residual {rep.weak_residual_sup:.3e}")
        _assert_entry(assertions, f"{name}_band_violation",
                      rep.band_violation <= 1e-8,
                      f"violation {rep.band_violation:.3e}")
    results["unique"] = unique
    results["extremal_gap_sup"] = float(np.max(np.abs(U_max - U_min)))

    if src.x_independent:
        analysis = constant_solution_analysis(src)
        results["constant_analysis"] = {
            "zeros": analysis.zeros,
            "sign_table": [{"interval": list(seg["interval"]),
                            "sign": seg["sign"]}
                           for seg in analysis.sign_table],
            "hypothesis_holds": analysis.hypothesis_holds,
            "predicted_min": analysis.predicted_min,
            "predicted_max": analysis.predicted_max,
            "caveat": analysis.caveat,
        }
        if analysis.hypothesis_holds and band == (0.0, src.delta0):
            ok_max = abs(float(np.max(U_max)) - analysis.predicted_max) \
                <= 100 * tol and \
                abs(float(np.min(U_max)) - analysis.predicted_max) <= 100 * tol
            ok_min = abs(float(np.max(U_min)) - analysis.predicted_min) \
                <= 100 * tol and \
                abs(float(np.min(U_min)) - analysis.predicted_min) <= 100 * tol
            _assert_entry(assertions, "extremal_constants_match_prediction",
                          ok_max and ok_min,
                          f"predicted [{analysis.predicted_min}, "
                          f"{analysis.predicted_max}]")

    def profile_plot(out_dir):
        _plot_profiles(mesh, {"U_min": U_min, "U_max": U_max},
                       out_dir / "profiles.svg", "extremal steady states")
        decay = {}
        if tr_lo.sup_diffs:
            decay["lower"] = (np.arange(1, tr_lo.n_iters + 1),
                              tr_lo.sup_diffs)
        if tr_hi.sup_diffs:
            decay["upper"] = (np.arange(1, tr_hi.n_iters + 1),
                              tr_hi.sup_diffs)
        if decay:
            _plot_decay(decay, out_dir / "iteration_decay.svg",
                        "fixed-point iteration decay", "iteration",
                        "sup |U_{n+1} - U_n|")
    plots.append(profile_plot)


def _run_gamma(cfg, assertions, results, fields, plots):
    mesh, op, p, src = cfg.mesh, cfg.op, cfg.p, cfg.src
    lam = src.lambda0
    g = src.g_lam(mesh.coords,
                  constant_field(mesh, cfg.params["g_state"]), lam)
    study = gamma_convergence_study(mesh, op, p, src, lam, g,
                                    cfg.params["eps_list"])
    results["gamma_table"] = study.rows
    results["min_limit"] = study.min_limit
    _assert_entry(assertions, "sandwich_bounds", study.ok,
                  f"{sum(r['passed'] for r in study.rows)}/"
                  f"{len(study.rows)} rows passed")
    gaps = [r["gap"] for r in study.rows]
    _assert_entry(assertions, "gaps_nonincreasing",
                  all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:])),
                  f"gaps {gaps}")

    def gamma_plot(out_dir):
        eps = [r["eps"] for r in study.rows]
        _plot_decay({"gap": (eps, [max(r["gap"], 1e-300)
                                   for r in study.rows]),
                     "bound": (eps, [r["bound"] for r in study.rows])},
                    out_dir / "gamma_gap.svg",
                    "perturbation gap vs bound", "eps", "gap", loglog=True)
    plots.append(gamma_plot)


def _run_rothe(cfg, assertions, results, fields, plots):
    mesh, op, p, src = cfg.mesh, cfg.op, cfg.p, cfg.src
    u0 = _state_field(mesh, cfg.params["u0"], mesh.dim, "[run].u0")
    companion = cfg.params.get("u0_companion")
    if companion is not None:
        companion = _state_field(mesh, companion, mesh.dim,
                                 "[run].u0_companion")
    traj = rothe_evolve(mesh, op, p, src, u0, cfg.params["tau"],
                        cfg.params["n_steps"], companion=companion)
    fields["u_initial"] = traj.states[0]
    fields["u_final"] = traj.final
    results["times"] = traj.times
    results["bound_violations"] = traj.diagnostics["bound_violations"]
    results["final_state_range"] = [float(np.min(traj.final)),
                                    float(np.max(traj.final))]
    _assert_entry(assertions, "state_box_invariance",
                  max(traj.diagnostics["bound_violations"],
                      default=0.0) <= 1e-8,
                  f"max violation "
                  f"{max(traj.diagnostics['bound_violations'], default=0.0):.3e}")
    if companion is not None:
        results["order_gaps"] = traj.diagnostics["order_gaps"]
        _assert_entry(assertions, "comparison_order_preserved",
                      traj.diagnostics["order_preserved"],
                      f"max gap {max(traj.diagnostics['order_gaps']):.3e}")

    def rothe_plot(out_dir):
        k = len(traj.states)
        picks = sorted({0, k // 4, k // 2, 3 * k // 4, k - 1})
        _plot_profiles(mesh,
                       {f"t={traj.times[i]:.3g}": traj.states[i]
                        for i in picks},
                       out_dir / "trajectory.svg", "implicit time stepping")
    plots.append(rothe_plot)


def _run_properties(cfg, assertions, results, fields, plots):
    mesh, op, p, src = cfg.mesh, cfg.op, cfg.p, cfg.src
    trials = cfg.params["trials"]
    seed = cfg.seed

    rep_mod = check_modular_relations(p, mesh, trials, seed)
    results["modular_relations"] = {
        "trials": rep_mod.trials, "checked": rep_mod.checked,
        "violations": len(rep_mod.violations),
        "items": list(rep_mod.items),
    }
    _assert_entry(assertions, "modular_relations", rep_mod.ok,
                  f"{rep_mod.checked} checks, "
                  f"{len(rep_mod.violations)} violations")

    rep_flux = check_structure(op, p, trials, seed + 1, points=mesh.coords)
    results["flux_structure"] = {
        "trials": rep_flux.trials, "checks": rep_flux.checks,
        "violations": len(rep_flux.violations),
    }
    _assert_entry(assertions, "flux_structure", rep_flux.ok,
                  f"{len(rep_flux.violations)} violations")

    rep_src = check_hypotheses(src, trials, seed + 2,
                               sample_points=mesh.coords)
    results["source_hypotheses"] = {
        "trials": rep_src.trials, "checks": rep_src.checks,
        "violations": len(rep_src.violations),
    }
    _assert_entry(assertions, "source_hypotheses", rep_src.ok,
                  f"{len(rep_src.violations)} violations")

    alphas = [a for a in (op.alpha, src.alpha) if a is not None]
    if alphas:
        diag = uniqueness_diagnostics(op, src, trials=min(trials, 32),
                                      seed=seed + 3, alphas=alphas,
                                      points=mesh.coords)
        results["uniqueness_diagnostics"] = diag


def run_experiment(cfg, out_dir=None, seed=None):
    """Execute a validated config; writes artifacts and returns (ok, report)."""
    if seed is not None:
        cfg.seed = int(seed)
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(exist_ok=True)

    assertions = []
    results = {}
    fields = {}
    plots = []
    t0 = time.perf_counter()
    if cfg.mode == "steady":
        _run_steady(cfg, (0.0, cfg.src.delta0), assertions, results,
                    fields, plots)
    elif cfg.mode == "band_steady":
        _run_steady(cfg, cfg.band, assertions, results, fields, plots)
    elif cfg.mode == "gamma_study":
        _run_gamma(cfg, assertions, results, fields, plots)
    elif cfg.mode == "rothe":
        _run_rothe(cfg, assertions, results, fields, plots)
    elif cfg.mode == "property_suite":
        _run_properties(cfg, assertions, results, fields, plots)
    else:  # pragma: no cover - validate_config guards this
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    wall = time.perf_counter() - t0

    report = {
        "config_path": str(cfg.path),
        "config": cfg.raw,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "mesh": {"dim": cfg.mesh.dim, "nodes": cfg.mesh.n_nodes,
                 "elements": cfg.mesh.n_elems, "volume": cfg.mesh.volume},
        "exponent_range": [cfg.p.p_min, cfg.p.p_max],
        "source": {"delta0": cfg.src.delta0, "lambda0": cfg.src.lambda0,
                   "band": list(cfg.band)},
        "results": results,
        "assertions": assertions,
        "passed": all(a["passed"] for a in assertions),
    }
    report = _jsonable(report)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "timing.json", "w") as fh:
        json.dump({"wall_time_s": wall}, fh, indent=2)
        fh.write("\n")
    _write_fields_csv(out / "fields.csv", cfg.mesh, fields)
    for plot_fn in plots:
        plot_fn(out / "plots")
    return report["passed"], report


def _cmd_run(args):
    try:
        cfg = validate_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        ok, report = run_experiment(cfg, out_dir=args.out, seed=args.seed)
    except (SolverNumericError, MonotonicityError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    for entry in report["assertions"]:
        status = "PASS" if entry["passed"] else "FAIL"
        print(f"[{status}] {entry['name']}: {entry['detail']}")
    print(f"report: {Path(args.out or cfg.out) / 'report.json'}")
    return 0 if ok else 1


def _cmd_validate(args):
    try:
        cfg = validate_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.config}: valid ({cfg.mode} on {cfg.mesh.n_nodes} nodes, "
          f"delta0={cfg.src.delta0}, lambda0={cfg.src.lambda0:.6g})")
    return 0


def bundled_configs():
    from importlib import resources
    root = resources.files("dnpsteady") / "configs"
    return sorted(p for p in root.iterdir() if p.name.endswith(".toml"))


def _cmd_suite(args):
    out_root = Path(args.out or "suite_out")
    worst = 0
    for cfg_path in bundled_configs():
        name = cfg_path.name.removesuffix(".toml")
        try:
            cfg = validate_config(cfg_path)
        except ConfigError as exc:
            print(f"[FAIL] {name}: config error: {exc}")
            worst = max(worst, 2)
            continue
        try:
            ok, _ = run_experiment(cfg, out_dir=out_root / name,
                                   seed=args.seed)
        except (SolverNumericError, MonotonicityError) as exc:
            print(f"[FAIL] {name}: numeric failure: {exc}")
            worst = max(worst, 3)
            continue
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        if not ok:
            worst = max(worst, 1)
    return worst


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dnp-steady",
        description="Steady states, perturbation studies and implicit time "
                    "stepping for doubly nonlinear diffusion experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=1,
                       help="reserved; runs are single-process deterministic")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_val.set_defaults(fn=_cmd_validate)

    p_suite = sub.add_parser("suite", help="run the bundled experiment set")
    p_suite.add_argument("--out", default=None)
    p_suite.add_argument("--seed", type=int, default=None)
    p_suite.add_argument("--threads", type=int, default=1)
    p_suite.set_defaults(fn=_cmd_suite)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
