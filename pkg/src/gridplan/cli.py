"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 infeasible,
4 solver limit or solver failure. Errors are also written as JSON to
stderr and, when possible, to ``error.json`` in the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ambiguity import AmbiguityError
from .config import ConfigError, RunConfig, load_config, parse_grid, parse_list
from .evaluate import EvaluationError, evpi, kappa_sweep, oos_protocol, risk_sweep, solve_method, vss
from .fixtures import fixture_model, fixture_scenarios
from .milp import INFEASIBLE, UNBOUNDED, InstanceError, SolveOptions, SolverError, write_lp
from .network import NetworkError, load_model, model_to_dict, save_model
from .reformulate import ReformulationError, RiskProfile, build_method
from .report import dumps, file_digest, text_digest, write_csv, write_json
from .scenario import ScenarioError, ablate, load_scenarios, save_scenarios, select_reference_scenario
from .scm import ScmError, ScmOptions, scm_solve

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 2, 3, 4

# flag dest -> config key
FLAG_KEYS = {
    "network": "paths.network", "scenarios": "paths.scenarios", "output": "paths.output",
    "method": "run.method", "mode": "run.mode", "ablation": "run.ablation",
    "reduction_goal": "run.reduction_goal", "jobs": "run.jobs",
    "lam": "risk.lambda", "alpha": "risk.alpha",
    "kappa": "mdro.kappa", "kappas": "mdro.kappas", "separate_duals": "mdro.separate_duals",
    "norm_order": "wdro.norm_order", "k_nominal": "wdro.k_nominal", "radius": "wdro.radius",
    "wdro_seed": "wdro.seed",
    "scm": "scm.enabled", "eps1": "scm.eps1", "eps2": "scm.eps2",
    "backend": "solver.backend", "time_limit": "solver.time_limit_s", "mip_gap": "solver.mip_gap",
    "partitions": "oos.partitions", "seed": "oos.seed", "in_fraction": "oos.in_fraction",
    "grid": "sweep.grid",
    "data_seed": "data.seed", "n_scenarios": "data.n_scenarios", "n_rep_days": "data.n_rep_days",
    "hours_per_day": "data.hours_per_day", "days_per_rep": "data.days_per_rep",
}

COMMANDS = {
    "solve": "solve", "vss": "vss", "evpi": "evpi", "oos": "oos", "risk-sweep": "risk_sweep",
    "kappa-sweep": "kappa_sweep", "gen-data": "gen_data", "export-lp": "export_lp",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--output", "-o", help="run directory")
    common.add_argument("--network", help="network JSON (default: built-in fixture)")
    common.add_argument("--scenarios", help="scenario CSV directory (default: synthetic fixture)")
    common.add_argument("--method", choices=("det", "sp", "mdro", "wdro"))
    common.add_argument("--mode", choices=("joint", "power_only"))
    common.add_argument("--ablation", choices=("none", "S1D0", "S0D1"))
    common.add_argument("--reduction-goal", dest="reduction_goal", type=float)
    common.add_argument("--jobs", type=int)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--separate-duals", dest="separate_duals", action="store_const", const="true")
    common.add_argument("--norm-order", dest="norm_order", type=float)
    common.add_argument("--k-nominal", dest="k_nominal", type=int)
    common.add_argument("--radius", type=float)
    common.add_argument("--wdro-seed", dest="wdro_seed", type=int)
    common.add_argument("--scm", action="store_const", const="true")
    common.add_argument("--eps1", type=float)
    common.add_argument("--eps2", type=float)
    common.add_argument("--backend", choices=("highs", "reference"))
    common.add_argument("--time-limit", dest="time_limit", type=float)
    common.add_argument("--mip-gap", dest="mip_gap", type=float)
    common.add_argument("--data-seed", dest="data_seed", type=int)
    common.add_argument("--n-scenarios", dest="n_scenarios", type=int)
    common.add_argument("--n-rep-days", dest="n_rep_days", type=int)
    common.add_argument("--hours-per-day", dest="hours_per_day", type=int)
    common.add_argument("--days-per-rep", dest="days_per_rep", type=int)

    parser = argparse.ArgumentParser(prog="gridplan", description="Power and gas expansion planning.")
    parser.add_argument("--version", action="version", version=f"gridplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "oos":
            p.add_argument("--partitions", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--in-fraction", dest="in_fraction", type=float)
        if name == "risk-sweep":
            p.add_argument("--grid", help="comma-separated lambda:alpha pairs")
        if name == "kappa-sweep":
            p.add_argument("--kappas", help="comma-separated kappa values")
    return parser


def config_from_args(args: argparse.Namespace, env=None) -> RunConfig:
    overrides = {"run.experiment": COMMANDS[args.command]}
    for dest, key in FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            overrides[key] = str(v)
    return load_config(args.config, env, overrides)


# -- inputs -------------------------------------------------------------------------------

def load_inputs(cfg: RunConfig):
    net = cfg.get("paths.network")
    model = load_model(net) if net else fixture_model()
    model = model.with_mode(cfg.mode)
    if cfg.reduction_goal is not None:
        model = model.with_params(reduction_goal=cfg.reduction_goal)
    scen = cfg.get("paths.scenarios")
    if scen:
        sset = load_scenarios(scen)
    else:
        sset = fixture_scenarios(int(cfg.get("data.seed")), int(cfg.get("data.n_scenarios")),
                                 n_rep_days=int(cfg.get("data.n_rep_days")),
                                 hours_per_day=int(cfg.get("data.hours_per_day")),
                                 days_per_rep=int(cfg.get("data.days_per_rep")))
    if cfg.ablation != "none":
        sset = ablate(sset, cfg.ablation, select_reference_scenario(sset, model.params.mmbtu_per_mwh))
    return model, sset


def input_digests(cfg: RunConfig, model) -> dict[str, str]:
    net = cfg.get("paths.network")
    scen = cfg.get("paths.scenarios")
    return {
        "network": file_digest(net) if net else "builtin:" + text_digest(json.dumps(model_to_dict(model),
                                                                                    sort_keys=True)),
        "scenarios": file_digest(scen) if scen else "synthetic:seed=" + cfg.get("data.seed"),
    }


def solver_options(cfg: RunConfig) -> SolveOptions:
    tl = cfg.get("solver.time_limit_s")
    return SolveOptions(time_limit=float(tl) if tl else None, mip_gap=float(cfg.get("solver.mip_gap")),
                        backend=cfg.get("solver.backend"))


def scm_options(cfg: RunConfig) -> ScmOptions:
    return ScmOptions(float(cfg.get("scm.eps1")), float(cfg.get("scm.eps2")))


def write_manifest(out: Path, cfg: RunConfig, model, outputs: list[str]) -> None:
    write_json(out / "manifest.json", {
        "tool": f"gridplan {__version__}",
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "inputs": input_digests(cfg, model),
        "seeds": {"data": cfg.get("data.seed"), "wdro": cfg.get("wdro.seed"), "oos": cfg.get("oos.seed")},
        "outputs": sorted(outputs),
    })


# -- commands ----------------------------------------------------------------------------

def _risk(cfg: RunConfig) -> RiskProfile:
    return RiskProfile(cfg.lam, cfg.alpha)


def cmd_solve(cfg, model, sset, out: Path) -> list[str]:
    art = build_method(cfg.method, model, sset, _risk(cfg), **cfg.method_kwargs())
    files = ["solution.json", "breakdown.csv"]
    if cfg.scm_enabled:
        plan, trace = scm_solve(art, scm_options(cfg), solver_options(cfg))
        # wall times vary run to run, so they stay out of the reproducible trace
        write_json(out / "scm_trace.json", trace.to_dict(timings=False))
        write_json(out / "timings.json", {"stage_wall_times": trace.wall_times})
        files += ["scm_trace.json", "timings.json"]
    else:
        plan = solve_method(art, solver_options(cfg))
    write_json(out / "solution.json", plan.to_dict())
    rows = [{"item": k, "value": v} for k, v in sorted(plan.breakdown().items())]
    rows += [{"item": f"objective.{k}", "value": v} for k, v in sorted(plan.decomposition.items())]
    rows.append({"item": "objective", "value": plan.objective})
    write_csv(out / "breakdown.csv", rows, ["item", "value"])
    return files


def cmd_value(cfg, model, sset, out: Path, which: str) -> list[str]:
    fn = vss if which == "vss" else evpi
    res = fn(model, sset, _risk(cfg), solver_options(cfg))
    write_json(out / f"{which}.json", {"z_sp": res.z_sp, "z_reference": res.z_other,
                                       "absolute": res.absolute, "normalized": res.normalized,
                                       "details": res.details})
    return [f"{which}.json"]


def cmd_oos(cfg, model, sset, out: Path) -> list[str]:
    parts = oos_protocol(model, sset, cfg.method, int(cfg.get("oos.partitions")), int(cfg.get("oos.seed")),
                         float(cfg.get("oos.in_fraction")), _risk(cfg), solver_options(cfg),
                         cfg.scm_enabled, scm_options(cfg), jobs=cfg.jobs, **cfg.method_kwargs())
    detail = []
    for p in parts:
        for s, total in zip(p.out_sample, p.out_totals):
            detail.append({"partition": p.index, "scenario": s, "in_sample_cost": p.in_sample_cost,
                           "total": total, "change": (total - p.in_sample_cost) / abs(p.in_sample_cost)})
    write_csv(out / "oos_scenarios.csv", detail,
              ["partition", "scenario", "in_sample_cost", "total", "change"])
    summary = [{"partition": p.index, "in_sample": " ".join(map(str, p.in_sample)),
                "in_sample_cost": p.in_sample_cost, "max_increase": p.max_increase} for p in parts]
    write_csv(out / "oos_partitions.csv", summary, ["partition", "in_sample", "in_sample_cost", "max_increase"])
    write_json(out / "oos.json", {"method": cfg.method, "partitions": [p.to_dict() for p in parts],
                                  "max_increase": max(p.max_increase for p in parts)})
    return ["oos_scenarios.csv", "oos_partitions.csv", "oos.json"]


RISK_COLUMNS = ["method", "lam", "alpha", "total_cost", "storage_cap", "thermal_cap", "vre_cap", "thermal_gen"]


def cmd_risk_sweep(cfg, model, sset, out: Path) -> list[str]:
    rows = risk_sweep(model, sset, cfg.method, parse_grid(cfg.get("sweep.grid")), solver_options(cfg),
                      cfg.scm_enabled, scm_options(cfg), **cfg.method_kwargs())
    gen_cols = [f"{v.id}_gen" for v in model.vre_types]
    value_cols = RISK_COLUMNS[3:] + gen_cols
    write_csv(out / "risk_sweep.csv", rows, RISK_COLUMNS + gen_cols + [f"pct_{c}" for c in value_cols])
    return ["risk_sweep.csv"]


def cmd_kappa_sweep(cfg, model, sset, out: Path) -> list[str]:
    kw = cfg.method_kwargs()
    kw.pop("kappa", None)
    rows = kappa_sweep(model, sset, parse_list(cfg.get("mdro.kappas")), _risk(cfg), solver_options(cfg),
                       cfg.scm_enabled, scm_options(cfg), **kw)
    write_csv(out / "kappa_sweep.csv", rows, ["kappa", "objective", "pct_change"])
    return ["kappa_sweep.csv"]


def cmd_gen_data(cfg, model, sset, out: Path) -> list[str]:
    save_scenarios(sset, out / "scenarios")
    save_model(model, out / "network.json")
    return ["scenarios", "network.json"]


def cmd_export_lp(cfg, model, sset, out: Path) -> list[str]:
    art = build_method(cfg.method, model, sset, _risk(cfg), **cfg.method_kwargs())
    write_lp(art.instance, out / "model.lp")
    return ["model.lp"]


HANDLERS = {
    "solve": cmd_solve, "oos": cmd_oos, "risk_sweep": cmd_risk_sweep, "kappa_sweep": cmd_kappa_sweep,
    "gen_data": cmd_gen_data, "export_lp": cmd_export_lp,
    "vss": lambda *a: cmd_value(*a, "vss"), "evpi": lambda *a: cmd_value(*a, "evpi"),
}


def run(cfg: RunConfig) -> list[str]:
    """Execute the configured experiment and return the files written."""
    out = Path(cfg.get("paths.output"))
    out.mkdir(parents=True, exist_ok=True)
    model, sset = load_inputs(cfg)
    files = HANDLERS[cfg.experiment](cfg, model, sset, out)
    write_manifest(out, cfg, model, files + ["manifest.json"])
    return files


def _status_exit(status: str | None) -> int:
    if status in (INFEASIBLE, UNBOUNDED):
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def _fail(code: int, exc: Exception, out: Path | None) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(dumps(payload))
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", payload)
        except OSError:
            pass
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = None
    try:
        if getattr(args, "output", None):
            out = Path(args.output)
        cfg = config_from_args(args)
        out = Path(cfg.get("paths.output"))
        run(cfg)
    except (ConfigError, NetworkError, ScenarioError, AmbiguityError, ReformulationError, InstanceError,
            OSError) as exc:
        return _fail(EXIT_CONFIG, exc, out)
    except (EvaluationError, ScmError) as exc:
        return _fail(_status_exit(exc.status), exc, out)
    except SolverError as exc:
        return _fail(EXIT_LIMIT, exc, out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
