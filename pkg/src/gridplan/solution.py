"""Solved plans: first-stage decisions, per-scenario operations, and cost reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .milp import OPTIMAL, SolveOptions, SolveResult, solve


@dataclass
class PlanSolution:
    method: str
    status: str
    objective: float
    bound: float
    first_stage: dict[str, float]
    first_stage_costs: dict[str, float]
    operating_costs: list[dict[str, float]]  # one dict per operations block
    scenario_costs: list[float]
    scenario_indices: list[int]
    weights: list[float]
    decomposition: dict[str, float]
    emissions: list[tuple[float, float]]  # (power, gas) per block
    wall_time: float = 0.0
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def first_stage_cost(self) -> float:
        return float(sum(self.first_stage_costs.values()))

    @property
    def expected_operating_cost(self) -> float:
        return float(np.dot(self.weights, self.scenario_costs))

    def breakdown(self) -> dict[str, float]:
        """First-stage costs plus weighted operating costs, by cost key."""
        out = dict(self.first_stage_costs)
        for w, costs in zip(self.weights, self.operating_costs):
            for k, v in costs.items():
                out[k] = out.get(k, 0.0) + w * v
        return out

    def expected_total(self) -> float:
        return self.first_stage_cost + self.expected_operating_cost

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "first_stage": self.first_stage,
            "first_stage_costs": self.first_stage_costs,
            "breakdown": self.breakdown(),
            "decomposition": self.decomposition,
            "scenarios": [
                {"index": s, "weight": w, "operating_cost": c, "costs": oc,
                 "emissions_power": e[0], "emissions_gas": e[1]}
                for s, w, c, oc, e in zip(self.scenario_indices, self.weights, self.scenario_costs,
                                          self.operating_costs, self.emissions)
            ],
        }


def plan_from_values(art, x: np.ndarray, status: str = OPTIMAL, objective: float | None = None,
                     bound: float | None = None, wall_time: float = 0.0) -> PlanSolution:
    """Assemble a :class:`PlanSolution` from a full variable vector of ``art.instance``."""
    fs = art.first_stage
    obj = art.instance.objective_value(x) if objective is None else objective
    emissions = []
    for b in art.blocks:
        eg = float(x[b.emissions_gas]) if b.emissions_gas is not None else 0.0
        emissions.append((float(x[b.emissions_power]), eg))
    return PlanSolution(
        method=art.method,
        status=status,
        objective=float(obj),
        bound=float(obj if bound is None else bound),
        first_stage={n: float(x[j]) for n, j in zip(fs.names, fs.indices)},
        first_stage_costs=fs.cost_value(x),
        operating_costs=[b.cost_value(x) for b in art.blocks],
        scenario_costs=[b.cost.value(x) for b in art.blocks],
        scenario_indices=list(art.block_scenarios),
        weights=[float(w) for w in art.weights],
        decomposition=art.decomposition(x),
        emissions=emissions,
        wall_time=wall_time,
        values=x,
    )


def plan_from_result(art, res: SolveResult) -> PlanSolution:
    return plan_from_values(art, res.values, res.status, res.objective, res.bound, res.wall_time)


def solve_ef(art, options: SolveOptions | None = None) -> tuple[PlanSolution | None, SolveResult]:
    """Solve the extensive form directly."""
    res = solve(art.instance, options)
    return (plan_from_result(art, res) if res.has_solution else None), res
