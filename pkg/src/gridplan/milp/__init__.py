"""Solver-agnostic MILP container, LP text format, and solver backends."""

from .instance import (BINARY, CONTINUOUS, EQ, GE, INF, INTEGER, LE, InstanceError,
                       MilpInstance, fix_variables, make_name, name_indices,
                       relax_integrality, row_group)
from .lpformat import LPParseError, dumps_lp, loads_lp, read_lp, write_lp
from .solve import (BACKENDS, FEASIBLE, INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED,
                    SolveOptions, SolveResult, SolverError, solve, solve_lp_relaxation)

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "INF", "INTEGER", "LE", "InstanceError",
    "MilpInstance", "fix_variables", "make_name", "name_indices", "relax_integrality",
    "row_group", "LPParseError", "dumps_lp", "loads_lp", "read_lp", "write_lp",
    "BACKENDS", "FEASIBLE", "INFEASIBLE", "OPTIMAL", "TIME_LIMIT", "UNBOUNDED",
    "SolveOptions", "SolveResult", "SolverError", "solve", "solve_lp_relaxation",
]
