"""Solver-agnostic sparse MILP container."""

from __future__ import annotations

import math
import re
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"
KINDS = (CONTINUOUS, INTEGER, BINARY)

LE, GE, EQ = "<=", ">=", "="
SENSES = (LE, GE, EQ)

INF = math.inf

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_(),.]*$")


class InstanceError(ValueError):
    """Raised for malformed instances (duplicate names, bad bounds, ...)."""


def row_group(name: str) -> str:
    """Family label of a row or variable: the name up to its index tuple."""
    head, _, _ = name.partition("(")
    return head


def name_indices(name: str) -> tuple[str, ...]:
    """Index tuple of ``group(a,b,c)`` names; empty for scalar names."""
    _, sep, rest = name.partition("(")
    if not sep:
        return ()
    return tuple(rest.rstrip(")").split(","))


def make_name(group: str, *idx) -> str:
    if not idx:
        return group
    return f"{group}({','.join(str(i) for i in idx)})"


class MilpInstance:
    """Minimization MILP stored row-wise.

    Variables live in parallel lists (names, bounds, kinds) and rows in a
    CSR-like layout. Names follow ``group(i,j,...)`` so that row families can
    be recovered from an exported LP file.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.kinds: list[str] = []
        self._var_index: dict[str, int] = {}

        self.row_names: list[str] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self._row_ptr: list[int] = [0]
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._row_index: dict[str, int] = {}

        self.objective: dict[int, float] = {}
        self.obj_constant = 0.0

    # -- variables -----------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.row_names)

    @property
    def nnz(self) -> int:
        return len(self._cols)

    def add_var(self, name: str, lower: float = 0.0, upper: float = INF,
                kind: str = CONTINUOUS) -> int:
        if name in self._var_index:
            raise InstanceError(f"duplicate variable {name!r}")
        if not _NAME_RE.match(name):
            raise InstanceError(f"invalid variable name {name!r}")
        if kind not in KINDS:
            raise InstanceError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lower, upper = max(0.0, lower), min(1.0, upper)
        lower, upper = float(lower), float(upper)
        if lower > upper:
            raise InstanceError(f"{name}: lower bound {lower} > upper bound {upper}")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lower.append(lower)
        self.upper.append(upper)
        self.kinds.append(kind)
        self._var_index[name] = idx
        return idx

    def var(self, name: str) -> int:
        try:
            return self._var_index[name]
        except KeyError:
            raise InstanceError(f"unknown variable {name!r}") from None

    def has_var(self, name: str) -> bool:
        return name in self._var_index

    def is_integer(self, idx: int) -> bool:
        return self.kinds[idx] != CONTINUOUS

    def integer_indices(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k != CONTINUOUS], dtype=int)

    # -- rows ----------------------------------------------------------
    def add_row(self, name: str, coefs: Iterable[tuple[int, float]] | Mapping[int, float],
                sense: str, rhs: float) -> int:
        if name in self._row_index:
            raise InstanceError(f"duplicate row {name!r}")
        if not _NAME_RE.match(name):
            raise InstanceError(f"invalid row name {name!r}")
        if sense not in SENSES:
            raise InstanceError(f"unknown sense {sense!r}")
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        merged: dict[int, float] = {}
        nvars = len(self.var_names)
        for j, a in items:
            if not 0 <= j < nvars:
                raise InstanceError(f"row {name!r} references undeclared variable {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        merged = {j: a for j, a in merged.items() if a != 0.0}
        if not merged:
            raise InstanceError(f"row {name!r} has no nonzero coefficients")
        idx = len(self.row_names)
        self.row_names.append(name)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self._cols.extend(merged.keys())
        self._vals.extend(merged.values())
        self._row_ptr.append(len(self._cols))
        self._row_index[name] = idx
        return idx

    def row(self, i: int) -> tuple[list[int], list[float], str, float]:
        a, b = self._row_ptr[i], self._row_ptr[i + 1]
        return self._cols[a:b], self._vals[a:b], self.senses[i], self.rhs[i]

    def row_index(self, name: str) -> int:
        return self._row_index[name]

    def has_row(self, name: str) -> bool:
        return name in self._row_index

    # -- objective -----------------------------------------------------
    def add_objective(self, idx: int, coef: float) -> None:
        if coef == 0.0:
            return
        if not 0 <= idx < len(self.var_names):
            raise InstanceError(f"objective references undeclared variable {idx}")
        val = self.objective.get(idx, 0.0) + float(coef)
        if val == 0.0:
            self.objective.pop(idx, None)
        else:
            self.objective[idx] = val

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, a in self.objective.items():
            c[j] = a
        return c

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.objective_vector() @ x) + self.obj_constant

    # -- matrix views ----------------------------------------------------
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.asarray(self._vals, dtype=float), np.asarray(self._cols, dtype=np.int64),
             np.asarray(self._row_ptr, dtype=np.int64)),
            shape=(self.num_rows, self.num_vars))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Row activity bounds (lo, hi) implied by senses."""
        rhs = np.asarray(self.rhs, dtype=float)
        senses = np.asarray(self.senses)
        lo = np.where(senses == LE, -np.inf, rhs)
        hi = np.where(senses == GE, np.inf, rhs)
        return lo, hi

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Scaled violation per row: excess / (1 + max(|rhs|, max_j |a_ij x_j|))."""
        if self.num_rows == 0:
            return np.zeros(0)
        A = self.matrix()
        act = A @ x
        lo, hi = self.row_bounds()
        excess = np.maximum(lo - act, 0.0) + np.maximum(act - hi, 0.0)
        mag = abs(A.multiply(x[np.newaxis, :])).max(axis=1).toarray().ravel()
        scale = 1.0 + np.maximum(np.abs(np.asarray(self.rhs)), mag)
        return excess / scale

    def bound_violation(self, x: np.ndarray) -> float:
        lb, ub = np.asarray(self.lower), np.asarray(self.upper)
        if x.size == 0:
            return 0.0
        return float(np.max(np.maximum(lb - x, 0.0) + np.maximum(x - ub, 0.0)))

    # -- copies / structural helpers -------------------------------------
    def copy(self, name: str | None = None) -> "MilpInstance":
        new = MilpInstance.__new__(MilpInstance)
        new.name = self.name if name is None else name
        new.var_names = list(self.var_names)
        new.lower = list(self.lower)
        new.upper = list(self.upper)
        new.kinds = list(self.kinds)
        new._var_index = dict(self._var_index)
        new.row_names = list(self.row_names)
        new.senses = list(self.senses)
        new.rhs = list(self.rhs)
        new._row_ptr = list(self._row_ptr)
        new._cols = list(self._cols)
        new._vals = list(self._vals)
        new._row_index = dict(self._row_index)
        new.objective = dict(self.objective)
        new.obj_constant = self.obj_constant
        return new

    def without_rows(self, drop: Iterable[int]) -> "MilpInstance":
        """Copy with the given row indices removed (variables untouched)."""
        drop = set(drop)
        new = self.copy()
        new.row_names, new.senses, new.rhs = [], [], []
        new._row_ptr, new._cols, new._vals = [0], [], []
        new._row_index = {}
        for i in range(self.num_rows):
            if i in drop:
                continue
            cols, vals, sense, rhs = self.row(i)
            new._row_index[self.row_names[i]] = len(new.row_names)
            new.row_names.append(self.row_names[i])
            new.senses.append(sense)
            new.rhs.append(rhs)
            new._cols.extend(cols)
            new._vals.extend(vals)
            new._row_ptr.append(len(new._cols))
        return new

    def validate(self) -> None:
        if len(set(self.var_names)) != len(self.var_names):
            raise InstanceError("duplicate variable names")
        for j, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if lo > hi:
                raise InstanceError(f"{self.var_names[j]}: lower > upper")
        n = self.num_vars
        if self._cols and (min(self._cols) < 0 or max(self._cols) >= n):
            raise InstanceError("row coefficient references undeclared variable")
        if any(not 0 <= j < n for j in self.objective):
            raise InstanceError("objective references undeclared variable")

    def equals(self, other: "MilpInstance") -> bool:
        return (
            self.var_names == other.var_names
            and self.lower == other.lower
            and self.upper == other.upper
            and self.kinds == other.kinds
            and self.row_names == other.row_names
            and self.senses == other.senses
            and self.rhs == other.rhs
            and self._row_ptr == other._row_ptr
            and self._cols == other._cols
            and self._vals == other._vals
            and sorted(self.objective.items()) == sorted(other.objective.items())
            and self.obj_constant == other.obj_constant
        )

    def group_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for name in self.row_names:
            g = row_group(name)
            counts[g] = counts.get(g, 0) + 1
        return counts

    def __repr__(self) -> str:
        return (f"MilpInstance({self.name!r}, vars={self.num_vars}, rows={self.num_rows}, "
                f"nnz={self.nnz}, integers={len(self.integer_indices())})")


def fix_variables(instance: MilpInstance, assignments: Mapping[str, float],
                  tol: float = 1e-6) -> MilpInstance:
    """Copy of ``instance`` with ``lower = upper = value`` for each assignment.

    Values within ``tol`` of a bound are snapped onto it; values further
    outside raise ``InstanceError``.
    """
    new = instance.copy()
    for name, value in assignments.items():
        j = new.var(name)
        lo, hi = new.lower[j], new.upper[j]
        value = float(value)
        if value < lo - tol or value > hi + tol:
            raise InstanceError(f"{name}={value} outside bounds [{lo}, {hi}]")
        value = min(max(value, lo), hi)
        new.lower[j] = value
        new.upper[j] = value
    return new


def relax_integrality(instance: MilpInstance) -> MilpInstance:
    new = instance.copy()
    new.kinds = [CONTINUOUS] * new.num_vars
    return new
