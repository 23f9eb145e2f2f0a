"""Second-stage evaluation, risk metrics, and experiment protocols.

Every protocol here is built from two primitives: solving a formulation
(:func:`solve_method`, directly or through the sequential heuristic) and
re-optimizing operations for a fixed investment (:func:`evaluate_second_stage`).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .builder import build_first_stage, build_operations_block
from .milp import OPTIMAL, MilpInstance, SolveOptions, fix_variables, solve, solve_lp_relaxation
from .network import EnergySystemModel
from .reformulate import (MDRO, SP, RiskProfile, build_deterministic_ef, build_method,
                          build_sp_ef)
from .scenario import MMBTU_PER_MWH, ScenarioSet, SingleScenarioData, TimeStructure, aggregate_demand
from .scm import ScmOptions, scm_solve
from .solution import PlanSolution, plan_from_result

__all__ = [
    "CostDistribution", "EvaluationError", "OosPartition", "PlanSolution", "cvar", "evaluate_scenarios",
    "evaluate_second_stage", "evpi", "first_stage_cost", "kappa_sweep", "lce", "out_of_sample",
    "oos_protocol", "risk_sweep", "solve_method", "vss",
]


class EvaluationError(RuntimeError):
    def __init__(self, message: str, status: str | None = None):
        super().__init__(message)
        self.status = status


# -- solving ----------------------------------------------------------------------------

def solve_method(art, solver: SolveOptions | None = None, use_scm: bool = False,
                 scm_options: ScmOptions | None = None) -> PlanSolution:
    """Solve a built formulation, exactly or with the sequential heuristic."""
    if use_scm:
        return scm_solve(art, scm_options, solver)[0]
    res = solve(art.instance, solver)
    if not res.has_solution:
        raise EvaluationError(f"{art.method}: no solution (status {res.status})", res.status)
    return plan_from_result(art, res)


# -- second stage ---------------------------------------------------------------------------

def _fixed_operations(model, time, data, first_stage: dict[str, float]):
    inst = MilpInstance("recourse")
    fs = build_first_stage(model, inst)
    ops = build_operations_block(model, time, data, fs, inst, "s0")
    for j, c in ops.cost.items():
        inst.add_objective(j, c)
    missing = set(fs.names) - set(first_stage)
    if missing:
        raise EvaluationError(f"first-stage values missing for {sorted(missing)[:3]}")
    for n in fs.names:
        j = inst.var(n)
        v = first_stage[n]
        if inst.is_integer(j) and abs(v - round(v)) > 1e-6:
            raise EvaluationError(f"{n}={v} is not integral")
    return inst, fs, ops


def evaluate_second_stage(model: EnergySystemModel, time: TimeStructure, first_stage: dict[str, float],
                          data: SingleScenarioData, solver: SolveOptions | None = None) -> float:
    """Optimal operating cost of one realization for a fixed investment."""
    inst, fs, ops = _fixed_operations(model, time, data, first_stage)
    fixed = fix_variables(inst, {n: first_stage[n] for n in fs.names})
    res = solve_lp_relaxation(fixed, solver)
    if res.status != OPTIMAL:
        raise EvaluationError(f"recourse problem returned {res.status}", res.status)
    return ops.cost.value(res.values)


def evaluate_scenarios(model: EnergySystemModel, sset: ScenarioSet, first_stage: dict[str, float],
                       solver: SolveOptions | None = None) -> np.ndarray:
    return np.array([evaluate_second_stage(model, sset.time, first_stage, sc, solver)
                     for sc in sset.scenarios])


def first_stage_cost(model: EnergySystemModel, first_stage: dict[str, float]) -> float:
    inst = MilpInstance("first_stage")
    fs = build_first_stage(model, inst)
    x = np.zeros(inst.num_vars)
    for n, j in zip(fs.names, fs.indices):
        x[j] = first_stage[n]
    return float(sum(fs.cost_value(x).values()))


# -- risk ---------------------------------------------------------------------------------------

def cvar(values, probs, alpha: float) -> float:
    """Conditional value-at-risk of a discrete cost distribution by scanning its support."""
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if v.shape != p.shape or v.size == 0:
        raise ValueError("values and probabilities must be nonempty and the same length")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if alpha == 0.0:
        return float(np.dot(p, v))
    scale = 1.0 / (1.0 - alpha)
    return float(min(eta + scale * float(np.dot(p, np.maximum(v - eta, 0.0))) for eta in np.unique(v)))


def risk_value(values, probs, risk: RiskProfile) -> float:
    """``lam * E + (1 - lam) * CVaR_alpha`` of a discrete distribution."""
    e = float(np.dot(probs, values))
    if risk.lam == 1.0:
        return e
    return risk.lam * e + (1 - risk.lam) * cvar(values, probs, risk.alpha)


@dataclass
class CostDistribution:
    totals: np.ndarray
    probabilities: np.ndarray
    alpha: float
    reference: float | None = None

    @property
    def mean(self) -> float:
        return float(np.dot(self.probabilities, self.totals))

    @property
    def cvar(self) -> float:
        return cvar(self.totals, self.probabilities, self.alpha)

    @property
    def max(self) -> float:
        return float(self.totals.max())

    @property
    def min(self) -> float:
        return float(self.totals.min())

    @property
    def changes(self) -> np.ndarray:
        """Relative change of each total against the reference cost."""
        if self.reference is None:
            raise EvaluationError("no reference cost supplied")
        return (self.totals - self.reference) / abs(self.reference)

    @property
    def max_increase(self) -> float:
        return float(self.changes.max())

    def summary(self) -> dict[str, float]:
        out = {"mean": self.mean, "cvar": self.cvar, "max": self.max, "min": self.min, "alpha": self.alpha}
        if self.reference is not None:
            out["reference"] = self.reference
            out["max_increase"] = self.max_increase
        return out


def out_of_sample(model: EnergySystemModel, first_stage: dict[str, float], holdout: ScenarioSet,
                  alpha: float = 0.95, reference: float | None = None,
                  solver: SolveOptions | None = None) -> CostDistribution:
    if len(holdout) == 0:
        raise EvaluationError("empty holdout set")
    fc = first_stage_cost(model, first_stage)
    ops = evaluate_scenarios(model, holdout, first_stage, solver)
    return CostDistribution(fc + ops, np.asarray(holdout.probabilities, dtype=float), alpha, reference)


@dataclass
class OosPartition:
    index: int
    in_sample: list[int]
    out_sample: list[int]
    in_sample_cost: float
    out_totals: list[float]
    max_increase: float
    plan_objective: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def partition(n: int, n_in: int, seed: int, index: int) -> tuple[list[int], list[int]]:
    perm = np.random.default_rng([seed, index]).permutation(n)
    return sorted(int(i) for i in perm[:n_in]), sorted(int(i) for i in perm[n_in:])


def _run_partition(model, sset, method, seed, k, n_in, risk, solver, use_scm, scm_options, kw):
    ins, outs = partition(len(sset), n_in, seed, k)
    train = sset.subset(ins)
    kw = dict(kw)
    method_seed = kw.pop("seed", seed) + k
    art = build_method(method, model, train, risk, seed=method_seed, **kw)
    plan = solve_method(art, solver, use_scm, scm_options)
    in_ops = evaluate_scenarios(model, train, plan.first_stage, solver)
    ref = plan.first_stage_cost + float(np.dot(train.probabilities, in_ops))
    dist = out_of_sample(model, plan.first_stage, sset.subset(outs), risk.alpha, ref, solver)
    return OosPartition(k, ins, outs, ref, dist.totals.tolist(), dist.max_increase, plan.objective)


def oos_protocol(model: EnergySystemModel, sset: ScenarioSet, method: str = SP, n_partitions: int = 20,
                 seed: int = 0, in_fraction: float = 0.5, risk: RiskProfile | None = None,
                 solver: SolveOptions | None = None, use_scm: bool = False,
                 scm_options: ScmOptions | None = None, jobs: int = 1, **method_kwargs) -> list[OosPartition]:
    """Random in/out splits: plan on one half, replay operations on the other.

    The in-sample cost of a partition is the investment cost plus the mean
    re-optimized operating cost over its in-sample scenarios; each held-out
    total is compared against it. Partitions run in ``jobs`` worker
    processes; results do not depend on ``jobs``.
    """
    n = len(sset)
    n_in = int(round(in_fraction * n))
    if not 1 <= n_in < n:
        raise EvaluationError("in_fraction leaves an empty side")
    risk = risk or RiskProfile()
    args = [(model, sset, method, seed, k, n_in, risk, solver, use_scm, scm_options, method_kwargs)
            for k in range(n_partitions)]
    if jobs <= 1:
        return [_run_partition(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_partition, *zip(*args)))


# -- value of the stochastic solution and of perfect information -------------------------------

@dataclass
class ValueMetric:
    z_sp: float
    z_other: float  # expected result of the mean-value plan (VSS) or wait-and-see value (EVPI)
    absolute: float
    normalized: float
    details: dict = field(default_factory=dict)


def _sp_plan(model, sset, risk, solver, sp_plan):
    if sp_plan is not None:
        return sp_plan
    return solve_method(build_sp_ef(model, sset, risk), solver)


def vss(model: EnergySystemModel, sset: ScenarioSet, risk: RiskProfile | None = None,
        solver: SolveOptions | None = None, sp_plan: PlanSolution | None = None) -> ValueMetric:
    """Cost of committing to the mean-value investment instead of the stochastic one."""
    risk = risk or RiskProfile(1.0)
    sp = _sp_plan(model, sset, risk, solver, sp_plan)
    mean_plan = solve_method(build_deterministic_ef(model, sset), solver)
    xbar = mean_plan.first_stage
    if xbar == sp.first_stage:
        # the restricted problem is minimized by the stochastic plan itself
        z_eev = sp.objective
        ops = None
    else:
        ops = evaluate_scenarios(model, sset, xbar, solver)
        z_eev = mean_plan.first_stage_cost + risk_value(ops, sset.probabilities, risk)
    diff = z_eev - sp.objective
    return ValueMetric(sp.objective, z_eev, diff, diff / sp.objective,
                       {"mean_value_first_stage": xbar,
                        "operating_costs": None if ops is None else ops.tolist()})


def evpi(model: EnergySystemModel, sset: ScenarioSet, risk: RiskProfile | None = None,
         solver: SolveOptions | None = None, sp_plan: PlanSolution | None = None) -> ValueMetric:
    """Here-and-now optimum minus the probability-weighted wait-and-see optima."""
    risk = risk or RiskProfile(1.0)
    sp = _sp_plan(model, sset, risk, solver, sp_plan)
    ws = np.array([solve_method(build_deterministic_ef(model, sset, sc), solver).objective
                   for sc in sset.scenarios])
    z_ws = risk_value(ws, sset.probabilities, risk)
    diff = sp.objective - z_ws
    return ValueMetric(sp.objective, z_ws, diff, diff / sp.objective, {"wait_and_see": ws.tolist()})


# -- levelized cost -----------------------------------------------------------------------

def lce(total_cost: float, sset: ScenarioSet, mmbtu_per_mwh: float = MMBTU_PER_MWH) -> float:
    """Total cost per MWh of average combined power and gas demand."""
    demand = float(np.dot(sset.probabilities, aggregate_demand(sset, mmbtu_per_mwh)))
    if demand <= 0:
        raise EvaluationError("combined demand is zero")
    return total_cost / demand


# -- sweeps -----------------------------------------------------------------------------------

def plan_outcomes(model: EnergySystemModel, sset: ScenarioSet, art, plan: PlanSolution) -> dict[str, float]:
    """Capacities from the investment and weighted annual generation by plant group."""
    fsv = plan.first_stage
    out = {"total_cost": plan.objective, "storage_cap": 0.0, "thermal_cap": 0.0, "vre_cap": 0.0,
           "thermal_gen": 0.0}
    for v in model.vre_types:
        out[f"{v.id}_gen"] = 0.0
    for name, v in fsv.items():
        if name.startswith("storage_energy("):
            out["storage_cap"] += v
    for n in model.power_nodes:
        for p in model.plant_types:
            cap = p.nameplate * fsv[f"n_operating({n.id},{p.id})"]
            out["thermal_cap" if p.is_thermal else "vre_cap"] += cap
    w = sset.time.hour_weights()
    x = plan.values
    if x is not None:
        for weight, block in zip(plan.weights, art.blocks):
            for (n, pid, t), j in block.gen.items():
                p = model.plant(pid)
                key = "thermal_gen" if p.is_thermal else f"{pid}_gen"
                out[key] += weight * w[t] * x[j]
    return out


def _pct(v: float, base: float) -> float:
    if base == 0:
        return 0.0 if v == 0 else math.copysign(math.inf, v)
    return 100.0 * (v - base) / abs(base)


def _solve_for_outcomes(method, model, sset, risk, solver, use_scm, scm_options, **kw):
    art = build_method(method, model, sset, risk, **kw)
    plan = solve_method(art, solver, use_scm, scm_options)
    return plan, plan_outcomes(model, sset, art, plan)


def risk_sweep(model: EnergySystemModel, sset: ScenarioSet, method: str, grid,
               solver: SolveOptions | None = None, use_scm: bool = False,
               scm_options: ScmOptions | None = None, **method_kwargs) -> list[dict]:
    """Outcomes per ``(lam, alpha)`` and their percentage change against ``lam = 1``."""
    grid = [(float(lam), float(a)) for lam, a in grid]
    if not grid:
        raise EvaluationError("empty risk grid")
    alpha0 = grid[0][1]
    _, base = _solve_for_outcomes(method, model, sset, RiskProfile(1.0, alpha0), solver, use_scm,
                                  scm_options, **method_kwargs)
    rows = []
    for lam, a in grid:
        if lam == 1.0:
            vals = base
        else:
            _, vals = _solve_for_outcomes(method, model, sset, RiskProfile(lam, a), solver, use_scm,
                                          scm_options, **method_kwargs)
        row = {"method": method, "lam": lam, "alpha": a}
        row.update(vals)
        row.update({f"pct_{k}": _pct(v, base[k]) for k, v in vals.items()})
        rows.append(row)
    return rows


def kappa_sweep(model: EnergySystemModel, sset: ScenarioSet, kappas, risk: RiskProfile | None = None,
                solver: SolveOptions | None = None, use_scm: bool = False,
                scm_options: ScmOptions | None = None, **method_kwargs) -> list[dict]:
    """Moment-based objective per deviation scale, relative to ``kappa = 1``."""
    kappas = [float(k) for k in kappas]
    if not kappas:
        raise EvaluationError("empty kappa list")
    cache: dict[float, float] = {}

    def objective(k):
        if k not in cache:
            art = build_method(MDRO, model, sset, risk, kappa=k, **method_kwargs)
            cache[k] = solve_method(art, solver, use_scm, scm_options).objective
        return cache[k]

    base = objective(1.0)
    return [{"kappa": k, "objective": objective(k), "pct_change": _pct(objective(k), base)} for k in kappas]

