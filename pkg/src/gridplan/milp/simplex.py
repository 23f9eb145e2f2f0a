"""Dense two-phase tableau simplex for small LPs.

Pricing is Dantzig's largest-reduced-cost rule; after a run of degenerate
pivots the method switches to Bland's rule, which guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import EQ, GE, LE


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray, tol: float):
        self.T = T
        self.basis = basis
        self.tol = tol

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c

    def run(self, allowed: np.ndarray, max_iter: int, degenerate_switch: int = 25) -> tuple[str, int]:
        """Minimize the objective stored in the last row over columns in ``allowed``."""
        T, tol = self.T, self.tol
        it = 0
        bland = False
        stall = 0
        while it < max_iter:
            red = T[-1, :-1]
            cand = np.flatnonzero((red < -tol) & allowed)
            if cand.size == 0:
                return "optimal", it
            c = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            colv = T[:-1, c]
            pos = colv > tol
            if not pos.any():
                return "unbounded", it
            ratios = np.full(colv.shape, np.inf)
            ratios[pos] = T[:-1, -1][pos] / colv[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + tol * max(1.0, abs(rmin)))
            # Bland: among tied rows pick the one whose basic variable has lowest index
            r = int(ties[np.argmin(self.basis[ties])])
            if rmin <= tol:
                stall += 1
                if stall >= degenerate_switch:
                    bland = True
            else:
                stall = 0
            self.pivot(r, c)
            it += 1
        return "iteration_limit", it


def solve_dense_lp(c: np.ndarray, A: np.ndarray, senses: list[str], b: np.ndarray,
                   lower: np.ndarray, upper: np.ndarray, tol: float = 1e-9,
                   max_iter: int = 50_000) -> LPResult:
    """Minimize ``c @ x`` s.t. ``A x (senses) b`` and ``lower <= x <= upper``."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(len(b), len(c))
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = len(c)
    if np.any(lower > upper + tol):
        return LPResult("infeasible", None, np.nan, 0)

    # Substitute x = shift + M y with y >= 0 (free variables split into two columns).
    cols_map: list[tuple[int, float]] = []  # (original var, sign) per y column
    shift = np.zeros(n)
    extra_rows: list[tuple[int, float]] = []  # (y column, upper) rows y <= ub - lb
    for j in range(n):
        lo, hi = lower[j], upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols_map.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols_map) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols_map.append((j, -1.0))
        else:
            cols_map.append((j, 1.0))
            cols_map.append((j, -1.0))
    ny = len(cols_map)
    M = np.zeros((n, ny))
    for k, (j, s) in enumerate(cols_map):
        M[j, k] = s

    Ay = A @ M if A.size else np.zeros((0, ny))
    by = b - (A @ shift if A.size else 0.0)
    cy = c @ M

    rows_A = [Ay[i] for i in range(Ay.shape[0])]
    rows_b = list(by)
    rows_s = list(senses)
    for k, ub in extra_rows:
        row = np.zeros(ny)
        row[k] = 1.0
        rows_A.append(row)
        rows_b.append(ub)
        rows_s.append(LE)
    m = len(rows_A)
    Ar = np.array(rows_A).reshape(m, ny)
    br = np.array(rows_b, dtype=float)
    sr = list(rows_s)
    for i in range(m):
        if br[i] < 0:
            Ar[i] = -Ar[i]
            br[i] = -br[i]
            sr[i] = {LE: GE, GE: LE, EQ: EQ}[sr[i]]

    n_slack = sum(1 for s in sr if s != EQ)
    n_art = sum(1 for s in sr if s != LE)
    width = ny + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :ny] = Ar
    T[:m, -1] = br
    basis = np.zeros(m, dtype=int)
    k_s, k_a = ny, ny + n_slack
    art_cols = []
    for i, s in enumerate(sr):
        if s == LE:
            T[i, k_s] = 1.0
            basis[i] = k_s
            k_s += 1
        elif s == GE:
            T[i, k_s] = -1.0
            k_s += 1
            T[i, k_a] = 1.0
            basis[i] = k_a
            art_cols.append(k_a)
            k_a += 1
        else:
            T[i, k_a] = 1.0
            basis[i] = k_a
            art_cols.append(k_a)
            k_a += 1

    tab = _Tableau(T, basis, tol)
    is_art = np.zeros(width, dtype=bool)
    is_art[art_cols] = True
    total_it = 0

    if art_cols:
        # phase 1: minimize the sum of artificials
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for i in range(m):
            if is_art[basis[i]]:
                T[-1] -= T[i]
        status, it = tab.run(np.ones(width, dtype=bool), max_iter)
        total_it += it
        if status == "iteration_limit":
            return LPResult(status, None, np.nan, total_it)
        if -T[-1, -1] > tol * max(1.0, np.abs(br).max(initial=0.0)) * 10:
            return LPResult("infeasible", None, np.nan, total_it)
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if is_art[tab.basis[i]]:
                row = tab.T[i, :width]
                cand = np.flatnonzero((np.abs(row) > tol) & ~is_art)
                if cand.size:
                    tab.pivot(i, int(cand[0]))
                else:
                    keep[i] = False
        if not keep.all():
            tab.T = np.vstack([tab.T[:-1][keep], tab.T[-1:]])
            tab.basis = tab.basis[keep]
            m = int(keep.sum())
        T = tab.T

    # phase 2
    T[-1, :] = 0.0
    T[-1, :ny] = cy
    T[-1, -1] = 0.0
    for i in range(m):
        j = tab.basis[i]
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[i]
    status, it = tab.run(~is_art, max_iter)
    total_it += it
    if status != "optimal":
        return LPResult(status, None, np.nan, total_it)

    y = np.zeros(width)
    y[tab.basis] = T[:m, -1]
    x = shift + M @ y[:ny]
    return LPResult("optimal", x, float(c @ x), total_it)
