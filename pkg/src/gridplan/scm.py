"""Sequential construction: three LP-based stages that end in a feasible plan.

1. Copper-plate relaxation: node balances and line limits are replaced by
   one system-wide balance per hour, integrality is relaxed.
2. The network is restored (still relaxed); thermal plant counts are
   rounded to the nearest integer, VRE counts are floored, and pipelines
   are kept open when their relaxed status reaches ``eps_pipe``.
3. Thermal counts and pipeline status keep their stage-2 values, candidate
   lines are built when their stage-2 value exceeds ``eps_line``, and the
   remaining model is solved with its original integrality.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .milp import (EQ, OPTIMAL, MilpInstance, SolveOptions, fix_variables, make_name,
                   relax_integrality, row_group, solve)
from .solution import PlanSolution, plan_from_values

NETWORK_FAMILIES = ("power_balance", "line_existing", "line_candidate")


class ScmError(RuntimeError):
    def __init__(self, stage: int, status: str):
        super().__init__(f"stage {stage} returned status {status}")
        self.stage = stage
        self.status = status


@dataclass(frozen=True)
class ScmOptions:
    eps_pipe: float = 0.01
    eps_line: float = 0.3

    def __post_init__(self):
        for key in ("eps_pipe", "eps_line"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ValueError(f"{key} must lie in [0, 1]")


@dataclass
class ScmTrace:
    objectives: list[float] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)
    fixed: list[dict[str, float]] = field(default_factory=list)
    max_violation: float = math.nan
    integrality_violation: float = math.nan
    lp_bound: float = math.nan
    reference: float | None = None

    @property
    def gap_vs_lp(self) -> float:
        return (self.objectives[-1] - self.lp_bound) / max(1.0, abs(self.lp_bound))

    @property
    def gap(self) -> float:
        """Relative gap to the reference optimum when one was given, else to the stage-1 bound."""
        if self.reference is None:
            return self.gap_vs_lp
        return (self.objectives[-1] - self.reference) / max(1.0, abs(self.reference))

    @property
    def total_time(self) -> float:
        return float(sum(self.wall_times))

    def to_dict(self, timings: bool = True) -> dict:
        out = {
            "stage_objectives": self.objectives,
            "fixed": self.fixed,
            "max_violation": self.max_violation,
            "integrality_violation": self.integrality_violation,
            "lp_bound": self.lp_bound,
            "gap_vs_lp": self.gap_vs_lp,
            "reference": self.reference,
            "gap": self.gap,
        }
        if timings:
            out["stage_wall_times"] = self.wall_times
        return out


def round_half_away(v: float, tol: float = 1e-9) -> float:
    r = round(v)
    if abs(v - r) <= tol:
        return float(r)
    return float(math.copysign(math.floor(abs(v) + 0.5), v))


def floor_snap(v: float, tol: float = 1e-9) -> float:
    r = round(v)
    if abs(v - r) <= tol:
        return float(r)
    return float(math.floor(v))


def copper_plate(art) -> MilpInstance:
    """Relaxed copy with network rows swapped for system-wide hourly balances."""
    inst = art.instance
    drop = [i for i, n in enumerate(inst.row_names) if row_group(n) in NETWORK_FAMILIES]
    cp = relax_integrality(inst.without_rows(drop))
    cp.name = inst.name + "_copper"
    sset = art.scenarios
    T = sset.time.n_hours
    for b, s in zip(art.blocks, art.block_scenarios):
        demand = sset.scenarios[s].power_demand.sum(axis=0)
        for t in range(T):
            coefs = [(j, 1.0) for (_, _, tt), j in b.gen.items() if tt == t]
            coefs += [(j, 1.0) for (_, tt), j in b.shed.items() if tt == t]
            for st in b.storage.values():
                coefs.append((st["discharge"][t], 1.0))
                coefs.append((st["charge"][t], -1.0))
            cp.add_row(make_name("system_balance", b.tag, t), coefs, EQ, float(demand[t]))
    return cp


def _stage(inst: MilpInstance, options: SolveOptions, stage: int, trace: ScmTrace):
    res = solve(inst, options)
    if res.status != OPTIMAL:
        raise ScmError(stage, res.status)
    trace.objectives.append(res.objective)
    trace.wall_times.append(res.wall_time)
    return res


def scm_solve(art, options: ScmOptions | None = None, solver: SolveOptions | None = None,
              reference: float | None = None) -> tuple[PlanSolution, ScmTrace]:
    """Run the three stages on a reformulation; ``reference`` is an EF optimum for the gap."""
    options = options or ScmOptions()
    solver = solver or SolveOptions()
    fs = art.first_stage
    inst = art.instance
    trace = ScmTrace(reference=reference)
    t0 = time.perf_counter()

    r1 = _stage(copper_plate(art), solver, 1, trace)
    trace.lp_bound = r1.objective
    x1 = r1.values

    fix2 = {}
    for n in fs.thermal_operating:
        fix2[n] = round_half_away(x1[inst.var(n)])
    for n in fs.vre_operating:
        fix2[n] = floor_snap(x1[inst.var(n)])
    for j in fs.pipe_active.values():
        fix2[inst.var_names[j]] = 1.0 if x1[j] >= options.eps_pipe else 0.0
    r2 = _stage(relax_integrality(fix_variables(inst, fix2)), solver, 2, trace)
    x2 = r2.values
    trace.fixed.append(fix2)

    fix3 = {n: fix2[n] for n in fs.thermal_operating}
    for j in fs.pipe_active.values():
        fix3[inst.var_names[j]] = fix2[inst.var_names[j]]
    for j in fs.line_build.values():
        fix3[inst.var_names[j]] = 1.0 if x2[j] > options.eps_line else 0.0
    r3 = _stage(fix_variables(inst, fix3), solver, 3, trace)
    trace.fixed.append(fix3)

    x = r3.values
    viol = inst.residuals(x)
    trace.max_violation = max(float(viol.max()) if viol.size else 0.0, inst.bound_violation(x))
    ints = inst.integer_indices()
    trace.integrality_violation = float(np.max(np.abs(x[ints] - np.round(x[ints])), initial=0.0))
    wall = time.perf_counter() - t0
    plan = plan_from_values(art, x, OPTIMAL, r3.objective, trace.lp_bound, wall)
    return plan, trace
