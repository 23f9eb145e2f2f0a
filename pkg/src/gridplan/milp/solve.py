"""Backend contract: solve / solve_lp_relaxation over :class:`MilpInstance`."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .instance import MilpInstance
from .simplex import solve_dense_lp

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time_limit"

BACKENDS = ("highs", "reference")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float | None = None
    mip_gap: float = 1e-4
    feasibility_tol: float = 1e-6
    integrality_tol: float = 1e-5
    seed: int = 0
    backend: str = "highs"
    max_nodes: int = 100_000

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        for key in ("mip_gap", "feasibility_tol", "integrality_tol"):
            if getattr(self, key) <= 0:
                raise ValueError(f"{key} must be positive")


@dataclass
class SolveResult:
    status: str
    objective: float
    bound: float
    values: np.ndarray | None
    wall_time: float
    names: list[str] = field(repr=False, default_factory=list)
    max_violation: float = 0.0
    nodes: int = 0

    @property
    def gap(self) -> float:
        if self.values is None or not math.isfinite(self.objective) or not math.isfinite(self.bound):
            return math.inf
        return abs(self.objective - self.bound) / max(1.0, abs(self.objective))

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    def value(self, name: str) -> float:
        if self.values is None:
            raise SolverError(f"no solution available (status {self.status})")
        return float(self.values[self.index()[name]])

    def as_dict(self) -> dict[str, float]:
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values.tolist()))

    def index(self) -> dict[str, int]:
        if not hasattr(self, "_idx"):
            self._idx = {n: i for i, n in enumerate(self.names)}
        return self._idx


def solve(instance: MilpInstance, options: SolveOptions | None = None) -> SolveResult:
    """Solve ``instance`` to the tolerances in ``options``."""
    return _dispatch(instance, options or SolveOptions(), relax=False)


def solve_lp_relaxation(instance: MilpInstance, options: SolveOptions | None = None) -> SolveResult:
    """Solve with every variable treated as continuous."""
    return _dispatch(instance, options or SolveOptions(), relax=True)


def _dispatch(instance: MilpInstance, options: SolveOptions, relax: bool) -> SolveResult:
    instance.validate()
    t0 = time.perf_counter()
    if options.backend == "highs":
        res = _solve_highs(instance, options, relax)
    else:
        res = _solve_reference(instance, options, relax)
    res.wall_time = time.perf_counter() - t0
    res.names = instance.var_names
    if res.values is not None:
        _snap_and_audit(instance, res, options, relax)
    return res


def _snap_and_audit(instance: MilpInstance, res: SolveResult, options: SolveOptions,
                    relax: bool) -> None:
    x = res.values
    lb, ub = np.asarray(instance.lower), np.asarray(instance.upper)
    x = np.minimum(np.maximum(x, lb), ub)
    if not relax:
        ints = instance.integer_indices()
        if ints.size:
            r = np.round(x[ints])
            frac = np.abs(x[ints] - r)
            if frac.max() > options.integrality_tol:
                raise SolverError(f"integrality violated by {frac.max():.3g}")
            x[ints] = r
    res.values = x
    viol = instance.residuals(x)
    res.max_violation = float(viol.max()) if viol.size else 0.0
    if res.max_violation > options.feasibility_tol:
        worst = int(np.argmax(viol))
        raise SolverError(
            f"post-solve residual check failed: row {instance.row_names[worst]!r} "
            f"violated by {res.max_violation:.3g} (scaled)")
    res.objective = instance.objective_value(x)


# -- HiGHS via scipy ------------------------------------------------------

def _solve_highs(instance: MilpInstance, options: SolveOptions, relax: bool) -> SolveResult:
    c = instance.objective_vector()
    integrality = np.zeros(instance.num_vars)
    if not relax:
        integrality[instance.integer_indices()] = 1
    bounds = Bounds(np.asarray(instance.lower), np.asarray(instance.upper))
    constraints = []
    if instance.num_rows:
        lo, hi = instance.row_bounds()
        constraints.append(LinearConstraint(instance.matrix(), lo, hi))
    opts = {"disp": False, "mip_rel_gap": options.mip_gap, "presolve": True}
    if options.time_limit is not None:
        opts["time_limit"] = options.time_limit
    out = milp(c, integrality=integrality, bounds=bounds, constraints=constraints, options=opts)
    const = instance.obj_constant
    if out.status == 0:
        obj = float(out.fun) + const
        bound = getattr(out, "mip_dual_bound", None)
        bound = obj if bound is None or not math.isfinite(bound) else float(bound) + const
        return SolveResult(OPTIMAL, obj, bound, np.array(out.x, dtype=float), 0.0,
                           nodes=int(getattr(out, "mip_node_count", 0) or 0))
    if out.status == 1:
        if out.x is not None:
            bound = getattr(out, "mip_dual_bound", None)
            bound = -math.inf if bound is None else float(bound) + const
            return SolveResult(TIME_LIMIT, float(out.fun) + const, bound,
                               np.array(out.x, dtype=float), 0.0)
        return SolveResult(TIME_LIMIT, math.nan, -math.inf, None, 0.0)
    if out.status == 2:
        return SolveResult(INFEASIBLE, math.nan, math.nan, None, 0.0)
    if out.status == 3:
        return SolveResult(UNBOUNDED, -math.inf, -math.inf, None, 0.0)
    raise SolverError(f"HiGHS failed: {out.message}")


# -- reference backend: dense simplex + best-bound branch and bound -------------

def _solve_reference(instance: MilpInstance, options: SolveOptions, relax: bool) -> SolveResult:
    c = instance.objective_vector()
    A = instance.matrix().toarray()
    b = np.asarray(instance.rhs, dtype=float)
    senses = list(instance.senses)
    lb0 = np.asarray(instance.lower, dtype=float)
    ub0 = np.asarray(instance.upper, dtype=float)
    const = instance.obj_constant
    ints = np.array([], dtype=int) if relax else instance.integer_indices()
    tol = options.integrality_tol

    if ints.size:
        # integer variables take integral bounds
        lb0 = lb0.copy()
        ub0 = ub0.copy()
        lb0[ints] = np.ceil(lb0[ints] - tol)
        ub0[ints] = np.floor(ub0[ints] + tol)

    def lp(lb, ub):
        return solve_dense_lp(c, A, senses, b, lb, ub)

    t0 = time.perf_counter()
    root = lp(lb0, ub0)
    if root.status == "infeasible":
        return SolveResult(INFEASIBLE, math.nan, math.nan, None, 0.0)
    if root.status == "unbounded":
        return SolveResult(UNBOUNDED, -math.inf, -math.inf, None, 0.0)
    if root.status != "optimal":
        raise SolverError(f"reference simplex: {root.status}")
    if ints.size == 0:
        return SolveResult(OPTIMAL, root.objective + const, root.objective + const, root.x, 0.0)

    incumbent_x = None
    incumbent = math.inf
    counter = 0
    heap = [(root.objective, counter, lb0, ub0, root.x)]
    nodes = 0
    status = OPTIMAL
    while heap:
        bound = heap[0][0]
        if incumbent_x is not None and (incumbent - bound) <= options.mip_gap * max(1.0, abs(incumbent + const)):
            break
        if nodes >= options.max_nodes or (
                options.time_limit is not None and time.perf_counter() - t0 > options.time_limit):
            status = TIME_LIMIT
            break
        obj, _, lb, ub, x = heapq.heappop(heap)
        nodes += 1
        if obj >= incumbent:
            continue
        frac = np.abs(x[ints] - np.round(x[ints]))
        if frac.max() <= tol:
            incumbent, incumbent_x = obj, x
            continue
        # most fractional; argmax returns the lowest index among ties
        score = np.minimum(x[ints] - np.floor(x[ints]), np.ceil(x[ints]) - x[ints])
        k = int(ints[np.argmax(score)])
        for side in (0, 1):
            clb, cub = lb.copy(), ub.copy()
            if side == 0:
                cub[k] = math.floor(x[k])
            else:
                clb[k] = math.ceil(x[k])
            if clb[k] > cub[k]:
                continue
            child = lp(clb, cub)
            if child.status == "optimal" and child.objective < incumbent:
                counter += 1
                heapq.heappush(heap, (child.objective, counter, clb, cub, child.x))
            elif child.status == "unbounded":
                return SolveResult(UNBOUNDED, -math.inf, -math.inf, None, 0.0)

    best_bound = min([h[0] for h in heap] + [incumbent]) if heap else incumbent
    if incumbent_x is None:
        if status == TIME_LIMIT:
            return SolveResult(TIME_LIMIT, math.nan, best_bound + const, None, 0.0, nodes=nodes)
        return SolveResult(INFEASIBLE, math.nan, math.nan, None, 0.0, nodes=nodes)
    if status == OPTIMAL and best_bound < incumbent and \
            (incumbent - best_bound) > options.mip_gap * max(1.0, abs(incumbent + const)):
        status = FEASIBLE
    return SolveResult(status, incumbent + const, best_bound + const, incumbent_x, 0.0, nodes=nodes)
