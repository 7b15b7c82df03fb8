"""Batch command-line front end.

Every run resolves one configuration from built-in defaults, an optional
YAML file (``--config``) and command-line flags, in that order of
precedence (flags win).  The output directory may also come from the
``TWOSTAGE_OUT`` environment variable, which sits between the file and the
``--out`` flag.  Results go to ``<out>/<command>.csv`` and
``<out>/<command>.jsonl``; the resolved configuration is written to
``<out>/<command>.config.json``.

Result files embed the tool version, the master seed and the resolved
configuration minus the execution-only keys (``workers``, ``out``), so
reruns with different worker counts produce byte-identical CSV.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import yaml

from . import __version__, ctmc
from .checks import duality_trials
from .configuration import Configuration, all_mature, from_sites, single_site
from .estimators import (BisectionConfig, NoSurvivalError, SurvivalSpec, branching_offspring_bound_check,
                         critical_lambda, edge_speed, offspring_expectation_mc, phase_diagram,
                         survival_probability, upper_density)
from .graph import GraphError, LatticeSpec, build_lattice, half_line_sites
from .graphical import Params, evolve_dual, evolve_forward, sample_events, write_trajectory_jsonl

log = logging.getLogger("twostage")

COMMANDS = ("simulate", "survival", "critical", "edge-speed", "density", "phase-diagram",
            "duality-test", "offspring")
EXECUTION_KEYS = ("workers", "out")
OUT_ENV = "TWOSTAGE_OUT"

PHASE_COLUMNS = ["lambda", "gamma", "delta", "survival_mean", "survival_se", "density_mean",
                 "density_se", "replicates"]
EDGE_COLUMNS = ["lambda", "gamma", "delta", "alpha_mean", "alpha_se", "truncated_fraction",
                "replicates"]
SURVIVAL_COLUMNS = ["lambda", "gamma", "delta", "survival_mean", "survival_se", "ci_low",
                    "ci_high", "replicates"]
DENSITY_COLUMNS = ["lambda", "gamma", "delta", "density_mean", "density_se", "mature_mean",
                   "mature_se", "replicates"]
CRITICAL_COLUMNS = ["gamma", "delta", "lambda_lo", "lambda_hi", "survival_lo", "survival_hi",
                    "iterations", "converged", "band_lo", "band_hi"]
DUALITY_COLUMNS = ["trials", "violations"]
OFFSPRING_COLUMNS = ["quantity", "estimate", "se", "target", "replicates"]

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "out": "results",
    "lattice": {"dimension": 1, "half_extent": 50, "range": 1, "boundary": "box"},
    "params": {"lambda": 2.0, "gamma": 4.0, "delta": 0.0},
    "run": {"t_max": 50.0, "replicates": 1000, "level": 0.95, "initial": "center",
            "process": "forward", "engine": "graphical", "side": "right"},
    "grid": {"lambdas": [1.0, 2.0, 3.0, 4.0, 5.0], "gammas": [0.2, 1.0, 2.0, 4.0, 8.0]},
    "density": {"boundary": "torus"},
    "bisection": {"theta": 0.05, "level": 0.95, "replicates": 400, "max_replicates": 3200,
                  "lam_start": 1.0, "lam_ceiling": 100.0, "tol": 0.05, "max_iter": 20},
    "duality_test": {"trials": 10000, "horizon": 2.0, "max_sites": 5},
    "offspring": {"replicates": 100000, "max_degree": 2},
}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key not in out:
            raise ConfigError(f"unknown configuration key {path + key!r}")
        if isinstance(out[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"configuration key {path + key!r} must be a section")
            out[key] = _merge(out[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


def _gamma(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "contact"):
        return math.inf
    return float(value)


def _float_list(text: str) -> list[float]:
    return [_gamma(tok) for tok in text.split(",") if tok.strip()]


def flag_overrides(args: argparse.Namespace) -> dict:
    """Nested override dict from the flags the user actually passed."""
    mapping = {
        "seed": ("seed",), "workers": ("workers",),
        "lam": ("params", "lambda"), "gamma": ("params", "gamma"), "delta": ("params", "delta"),
        "dimension": ("lattice", "dimension"), "half_extent": ("lattice", "half_extent"),
        "range": ("lattice", "range"), "boundary": ("lattice", "boundary"),
        "t_max": ("run", "t_max"), "replicates": ("run", "replicates"), "level": ("run", "level"),
        "initial": ("run", "initial"), "process": ("run", "process"), "engine": ("run", "engine"),
        "side": ("run", "side"),
        "lambdas": ("grid", "lambdas"), "gammas": ("grid", "gammas"),
        "density_boundary": ("density", "boundary"),
        "theta": ("bisection", "theta"), "lam_ceiling": ("bisection", "lam_ceiling"),
        "tol": ("bisection", "tol"), "probe_replicates": ("bisection", "replicates"),
        "max_replicates": ("bisection", "max_replicates"),
        "trials": ("duality_test", "trials"), "horizon": ("duality_test", "horizon"),
        "max_degree": ("offspring", "max_degree"),
        "offspring_replicates": ("offspring", "replicates"),
    }
    out: dict = {}
    for attr, path in mapping.items():
        val = getattr(args, attr, None)
        if val is None:
            continue
        node = out
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = val
    return out


def resolve_config(command: str, config_path: str | None, overrides: dict,
                   env: dict | None = None) -> dict:
    env = os.environ if env is None else env
    cfg = copy.deepcopy(DEFAULTS)
    if config_path:
        try:
            loaded = yaml.safe_load(Path(config_path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        cfg = _merge(cfg, loaded)
    if env.get(OUT_ENV):
        cfg["out"] = env[OUT_ENV]
    cfg = _merge(cfg, overrides)
    cfg["command"] = command
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    """Build every object a command will need, so errors surface before any simulation."""
    try:
        seed = int(cfg["seed"])
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if int(cfg["workers"]) < 1:
            raise ConfigError("workers must be >= 1")
        lattice_spec(cfg)
        params_of(cfg)
        run = cfg["run"]
        if float(run["t_max"]) < 0:
            raise ConfigError("t_max must be nonnegative")
        if int(run["replicates"]) < 1:
            raise ConfigError("replicates must be >= 1")
        if run["process"] not in ("forward", "dual"):
            raise ConfigError("process must be 'forward' or 'dual'")
        if run["engine"] not in ("graphical", "ctmc"):
            raise ConfigError("engine must be 'graphical' or 'ctmc'")
        if run["side"] not in ("left", "right"):
            raise ConfigError("side must be 'left' or 'right'")
        if not 0 < float(run["level"]) < 1:
            raise ConfigError("level must lie in (0, 1)")
        for g in cfg["grid"]["gammas"]:
            Params(1.0, _gamma(g), float(cfg["params"]["delta"]))
        for lam in cfg["grid"]["lambdas"]:
            Params(float(lam), 1.0)
        bisection_config(cfg)
        if cfg["density"]["boundary"] not in ("box", "torus"):
            raise ConfigError("density.boundary must be 'box' or 'torus'")
        if int(cfg["duality_test"]["trials"]) < 1:
            raise ConfigError("duality_test.trials must be >= 1")
        if int(cfg["offspring"]["replicates"]) < 1:
            raise ConfigError("offspring.replicates must be >= 1")
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError, GraphError) as exc:
        raise ConfigError(str(exc)) from exc


def lattice_spec(cfg: dict, boundary: str | None = None) -> LatticeSpec:
    lat = cfg["lattice"]
    return LatticeSpec(int(lat["dimension"]), int(lat["half_extent"]), int(lat["range"]),
                       boundary or lat["boundary"])


def params_of(cfg: dict, lam=None, gamma=None) -> Params:
    p = cfg["params"]
    return Params(float(p["lambda"] if lam is None else lam),
                  _gamma(p["gamma"] if gamma is None else gamma), float(p["delta"]))


def bisection_config(cfg: dict) -> BisectionConfig:
    b = cfg["bisection"]
    bc = BisectionConfig(float(b["theta"]), float(b["level"]), int(b["replicates"]),
                         int(b["max_replicates"]), float(b["lam_start"]), float(b["lam_ceiling"]),
                         float(b["tol"]), int(b["max_iter"]))
    if not 0 < bc.theta < 1:
        raise ConfigError("theta must lie in (0, 1)")
    return bc


def survival_spec(cfg: dict, boundary: str | None = None, initial: str | None = None) -> SurvivalSpec:
    run = cfg["run"]
    return SurvivalSpec(lattice_spec(cfg, boundary), float(run["t_max"]), int(run["replicates"]),
                        initial or run["initial"], float(run["level"]))


def embedded_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS and not k.startswith("_")}


# --------------------------------------------------------------------------
# output


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_results(cfg: dict, columns: list[str], rows: list[dict], records: list[dict]) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    name = cfg["command"]
    meta = {"tool": "twostage", "version": __version__, "seed": int(cfg["seed"]),
            "config": embedded_config(cfg)}
    buf = io.StringIO()
    buf.write(f"# twostage {__version__}\n")
    buf.write(f"# seed: {int(cfg['seed'])}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    csv_path = out / f"{name}.csv"
    csv_path.write_text(buf.getvalue())
    with open(out / f"{name}.jsonl", "w") as fh:
        fh.write(json.dumps({"record": "meta", **meta}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps({"record": "result", **rec}, sort_keys=True, default=_json_default) + "\n")
    (out / f"{name}.config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return csv_path


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return {k: getattr(obj, k) for k in obj.__dataclass_fields__}
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _gamma_out(p: Params):
    return "inf" if p.contact_mode else p.gamma


# --------------------------------------------------------------------------
# commands


def _initial(cfg: dict, graph) -> Configuration:
    init = cfg["run"]["initial"]
    if init == "center":
        return single_site(graph, graph.center())
    if init == "all_mature":
        return all_mature(graph)
    if init == "half_line":
        return from_sites(graph, half_line_sites(graph))
    c = Configuration(init)
    if len(c) != graph.n:
        raise ConfigError(f"initial configuration has {len(c)} sites, lattice has {graph.n}")
    return c


def cmd_simulate(cfg: dict) -> int:
    graph = build_lattice(lattice_spec(cfg))
    params = params_of(cfg)
    run = cfg["run"]
    t_max, seed = float(run["t_max"]), int(cfg["seed"])
    c0 = _initial(cfg, graph)
    traj = None
    if t_max > 0:
        if run["engine"] == "ctmc":
            rng = __import__("numpy").random.default_rng(seed)
            traj = ctmc.run(graph, params, c0, run["process"], t_max, rng, record=True).trajectory
        else:
            events = sample_events(graph, params, t_max, seed)
            evolve = evolve_dual if run["process"] == "dual" else evolve_forward
            traj = evolve(c0, events, t_max)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    extra = {"process": run["process"], "engine": run["engine"], "t_max": t_max,
             "initial": str(c0), "version": __version__}
    with open(out / "trajectory.jsonl", "w") as fh:
        write_trajectory_jsonl(fh, traj, graph, params, seed, extra)
    (out / "simulate.config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    print(f"changes: {0 if traj is None else len(traj)}")
    return 0


def cmd_survival(cfg: dict) -> int:
    spec = survival_spec(cfg)
    dual = cfg["run"]["process"] == "dual"
    rows, recs = [], []
    for lam in cfg["grid"]["lambdas"] if cfg.get("_sweep") else [cfg["params"]["lambda"]]:
        p = params_of(cfg, lam=lam)
        est = survival_probability(spec, p, int(cfg["seed"]), dual=dual, workers=int(cfg["workers"]))
        rows.append({"lambda": p.lam, "gamma": _gamma_out(p), "delta": p.delta,
                     "survival_mean": est.mean, "survival_se": est.std_error,
                     "ci_low": est.ci_low, "ci_high": est.ci_high, "replicates": est.replicates})
        recs.append({"params": p.as_dict(), "survival": est, "dual": dual})
        print(f"lambda={p.lam} survival={est.mean:.4f} +- {est.std_error:.4f}")
    write_results(cfg, SURVIVAL_COLUMNS, rows, recs)
    return 0


def cmd_critical(cfg: dict) -> int:
    bc = bisection_config(cfg)
    spec = survival_spec(cfg, initial="center")
    delta = float(cfg["params"]["delta"])
    gammas = cfg["grid"]["gammas"] if cfg.get("_sweep") else [cfg["params"]["gamma"]]
    rows, recs, status = [], [], 0
    for g in gammas:
        g = _gamma(g)
        try:
            br = critical_lambda(g, delta, spec, bc, int(cfg["seed"]), workers=int(cfg["workers"]))
        except NoSurvivalError as exc:
            print(f"gamma={g}: {exc}", file=sys.stderr)
            rows.append({"gamma": "inf" if math.isinf(g) else g, "delta": delta, "lambda_lo": None,
                         "lambda_hi": None, "survival_lo": None, "survival_hi": None,
                         "iterations": 0, "converged": False, "band_lo": None, "band_hi": None})
            recs.append({"gamma": g, "delta": delta, "error": str(exc)})
            status = 1
            continue
        band = br.band or (None, None)
        rows.append({"gamma": "inf" if math.isinf(g) else g, "delta": delta,
                     "lambda_lo": br.lam_lo, "lambda_hi": br.lam_hi,
                     "survival_lo": None if br.est_lo is None else br.est_lo.mean,
                     "survival_hi": br.est_hi.mean, "iterations": br.iterations,
                     "converged": br.converged, "band_lo": band[0], "band_hi": band[1]})
        recs.append({"gamma": "inf" if math.isinf(g) else g, "delta": delta, "bracket": [br.lam_lo, br.lam_hi],
                     "band": br.band, "probes": [{"lambda": lam, "survival": e} for lam, e in br.probes]})
        print(f"gamma={g}: lambda_c in [{br.lam_lo:.4f}, {br.lam_hi:.4f}]")
    write_results(cfg, CRITICAL_COLUMNS, rows, recs)
    return status


def cmd_edge_speed(cfg: dict) -> int:
    run = cfg["run"]
    lat = lattice_spec(cfg)
    if lat.dimension != 1:
        raise ConfigError("edge-speed needs a one-dimensional lattice")
    rows, recs = [], []
    for lam in cfg["grid"]["lambdas"] if cfg.get("_sweep") else [cfg["params"]["lambda"]]:
        p = params_of(cfg, lam=lam)
        res = edge_speed(p, lat.half_extent, float(run["t_max"]), int(run["replicates"]),
                         int(cfg["seed"]), side=run["side"], level=float(run["level"]),
                         range_=lat.range, workers=int(cfg["workers"]))
        rows.append({"lambda": p.lam, "gamma": _gamma_out(p), "delta": p.delta,
                     "alpha_mean": res.speed.mean, "alpha_se": res.speed.std_error,
                     "truncated_fraction": res.truncated_fraction, "replicates": res.speed.replicates})
        recs.append({"params": p.as_dict(), "speed": res.speed, "side": res.side,
                     "truncated_fraction": res.truncated_fraction, "empty_fraction": res.empty_fraction})
        print(f"lambda={p.lam} alpha={res.speed.mean:.4f} +- {res.speed.std_error:.4f}")
    write_results(cfg, EDGE_COLUMNS, rows, recs)
    return 0


def cmd_density(cfg: dict) -> int:
    spec = survival_spec(cfg, boundary=cfg["density"]["boundary"], initial="all_mature")
    dual = cfg["run"]["process"] == "dual"
    p = params_of(cfg)
    res = upper_density(p, spec, int(cfg["seed"]), dual=dual, workers=int(cfg["workers"]))
    rows = [{"lambda": p.lam, "gamma": _gamma_out(p), "delta": p.delta,
             "density_mean": res.active.mean, "density_se": res.active.std_error,
             "mature_mean": res.mature.mean, "mature_se": res.mature.std_error,
             "replicates": res.active.replicates}]
    write_results(cfg, DENSITY_COLUMNS, rows, [{"params": p.as_dict(), "density": res, "dual": dual}])
    print(f"density={res.active.mean:.4f} +- {res.active.std_error:.4f}")
    return 0


def cmd_phase_diagram(cfg: dict) -> int:
    surv = survival_spec(cfg, initial="center")
    dens = survival_spec(cfg, boundary=cfg["density"]["boundary"], initial="all_mature")
    theta = float(cfg["bisection"]["theta"])
    points = phase_diagram(float(cfg["params"]["delta"]), [float(x) for x in cfg["grid"]["lambdas"]],
                           [_gamma(g) for g in cfg["grid"]["gammas"]], surv, dens,
                           int(cfg["seed"]), theta=theta, workers=int(cfg["workers"]))
    rows, recs = [], []
    for pt in points:
        gamma = "inf" if math.isinf(pt.gamma) else pt.gamma
        rows.append({"lambda": pt.lam, "gamma": gamma, "delta": pt.delta,
                     "survival_mean": pt.survival.mean, "survival_se": pt.survival.std_error,
                     "density_mean": pt.density.mean, "density_se": pt.density.std_error,
                     "replicates": pt.survival.replicates})
        recs.append({"lambda": pt.lam, "gamma": gamma, "delta": pt.delta, "survival": pt.survival,
                     "density": pt.density, "boundary_band": pt.boundary_band})
    write_results(cfg, PHASE_COLUMNS, rows, recs)
    print(f"grid points: {len(points)}")
    return 0


def cmd_duality_test(cfg: dict) -> int:
    dt = cfg["duality_test"]
    res = duality_trials(int(dt["trials"]), int(cfg["seed"]), float(dt["horizon"]), int(dt["max_sites"]))
    write_results(cfg, DUALITY_COLUMNS, [{"trials": res.trials, "violations": res.violations}],
                  [{"trials": res.trials, "violations": res.violations,
                    "examples": [list(map(str, ex)) for ex in res.examples]}])
    print(f"violations: {res.violations}")
    return 0 if res.violations == 0 else 1


def cmd_offspring(cfg: dict) -> int:
    off = cfg["offspring"]
    n, seed = int(off["replicates"]), int(cfg["seed"])
    res = offspring_expectation_mc(n, seed)
    rows = [{"quantity": "offspring_mean", "estimate": res.mean.mean, "se": res.mean.std_error,
             "target": 1.0, "replicates": n},
            {"quantity": "p_zero", "estimate": res.p_zero.mean, "se": res.p_zero.std_error,
             "target": 0.5, "replicates": n}]
    p = params_of(cfg)
    if not p.contact_mode:
        br = branching_offspring_bound_check(p, int(off["max_degree"]), n, seed)
        rows.append({"quantity": "juvenile_offspring", "estimate": br.offspring.mean,
                     "se": br.offspring.std_error, "target": br.bound, "replicates": n})
        rows.append({"quantity": "maturation_probability", "estimate": br.maturation.mean,
                     "se": br.maturation.std_error, "target": br.maturation_target, "replicates": n})
    write_results(cfg, OFFSPRING_COLUMNS, rows, rows)
    for r in rows:
        print(f"{r['quantity']}: {r['estimate']:.4f} +- {r['se']:.4f} (target {r['target']:.4f})")
    return 0


HANDLERS = {
    "simulate": cmd_simulate, "survival": cmd_survival, "critical": cmd_critical,
    "edge-speed": cmd_edge_speed, "density": cmd_density, "phase-diagram": cmd_phase_diagram,
    "duality-test": cmd_duality_test, "offspring": cmd_offspring,
}


# --------------------------------------------------------------------------
# argument parsing


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="YAML configuration file")
    parser.add_argument("--seed", type=int, metavar="U64", default=default, help="master seed")
    parser.add_argument("--workers", type=int, metavar="N", default=default, help="worker processes")
    parser.add_argument("--out", metavar="DIR", default=default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twostage",
                                     description="Two-stage contact process simulator and estimators")
    parser.add_argument("--version", action="version", version=f"twostage {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--gamma", type=_gamma, help="maturation rate, or 'inf' for the contact process")
        p.add_argument("--delta", type=float)
        p.add_argument("--dimension", type=int)
        p.add_argument("-L", "--half-extent", dest="half_extent", type=int)
        p.add_argument("--range", type=int)
        p.add_argument("--boundary", choices=["box", "torus"])
        p.add_argument("--t-max", dest="t_max", type=float)
        p.add_argument("--replicates", type=int)
        p.add_argument("--level", type=float)
        return p

    p = add("simulate", "run one trajectory and dump it as JSONL")
    p.add_argument("--process", choices=["forward", "dual"])
    p.add_argument("--dual", dest="process", action="store_const", const="dual")
    p.add_argument("--engine", choices=["graphical", "ctmc"])
    p.add_argument("--initial", help="center, all_mature, half_line or a 0/1/2 string")

    p = add("survival", "single-site survival probability")
    p.add_argument("--process", choices=["forward", "dual"])
    p.add_argument("--lambdas", type=_float_list, help="comma-separated sweep over lambda")

    p = add("critical", "bracket the critical transmission rate")
    p.add_argument("--gammas", type=_float_list, help="comma-separated sweep over gamma")
    p.add_argument("--theta", type=float)
    p.add_argument("--lam-ceiling", dest="lam_ceiling", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--probe-replicates", dest="probe_replicates", type=int)
    p.add_argument("--max-replicates", dest="max_replicates", type=int)

    p = add("edge-speed", "right-edge speed from a half-line of mature sites")
    p.add_argument("--side", choices=["left", "right"])
    p.add_argument("--lambdas", type=_float_list, help="comma-separated sweep over lambda")

    p = add("density", "upper invariant density at the origin")
    p.add_argument("--process", choices=["forward", "dual"])
    p.add_argument("--density-boundary", dest="density_boundary", choices=["box", "torus"])

    p = add("phase-diagram", "survival and density over a (lambda, gamma) grid")
    p.add_argument("--lambdas", type=_float_list)
    p.add_argument("--gammas", type=_float_list)
    p.add_argument("--theta", type=float)
    p.add_argument("--density-boundary", dest="density_boundary", choices=["box", "torus"])

    p = add("duality-test", "randomised pathwise duality check")
    p.add_argument("--trials", type=int)
    p.add_argument("--horizon", type=float)

    p = add("offspring", "offspring identity and the juvenile offspring bound")
    p.add_argument("--max-degree", dest="max_degree", type=int)
    p.add_argument("--offspring-replicates", dest="offspring_replicates", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = flag_overrides(args)
    try:
        cfg = resolve_config(args.command, args.config, overrides)
        if args.out is not None:
            cfg["out"] = args.out
        cfg["_sweep"] = bool(overrides.get("grid"))
        return HANDLERS[args.command](cfg)
    except (ConfigError, GraphError) as exc:
        print(f"twostage: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
