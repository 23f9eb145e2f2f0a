"""Ambiguity sets and Wasserstein distances between discrete distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .scenario import MomentStatistics, ScenarioSet, SingleScenarioData, moment_statistics

FAMILIES = ("power", "gas", "cf")


class AmbiguityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MomentAmbiguity:
    """Box around the mean for every uncertain entry.

    ``lower``/``upper`` hold the per-node deviations broadcast to the full
    index shape of each family, so the admissible mean of entry ``e`` is
    ``[means[e] + lower[e], means[e] + upper[e]]``.
    """

    means: dict[str, np.ndarray]
    lower: dict[str, np.ndarray]
    upper: dict[str, np.ndarray]
    kappa: float

    def __post_init__(self):
        for f in FAMILIES:
            if np.any(self.lower[f] > 0) or np.any(self.upper[f] < 0):
                raise AmbiguityError(f"{f}: deviations must satisfy lower <= 0 <= upper")
            if self.lower[f].shape != self.means[f].shape or self.upper[f].shape != self.means[f].shape:
                raise AmbiguityError(f"{f}: deviation shape differs from the means")

    @classmethod
    def from_statistics(cls, stats: MomentStatistics) -> "MomentAmbiguity":
        means = stats.means
        lower = {
            "power": np.broadcast_to(stats.lower["power"][:, None], means["power"].shape).copy(),
            "gas": np.broadcast_to(stats.lower["gas"][:, None], means["gas"].shape).copy(),
            "cf": np.broadcast_to(stats.lower["cf"][:, :, None], means["cf"].shape).copy(),
        }
        upper = {
            "power": np.broadcast_to(stats.upper["power"][:, None], means["power"].shape).copy(),
            "gas": np.broadcast_to(stats.upper["gas"][:, None], means["gas"].shape).copy(),
            "cf": np.broadcast_to(stats.upper["cf"][:, :, None], means["cf"].shape).copy(),
        }
        return cls(means, lower, upper, stats.kappa)

    def contains_mean_of(self, sset: ScenarioSet, tol: float = 1e-9) -> bool:
        """Whether the set's own probability-weighted mean lies in the box."""
        for f in FAMILIES:
            m = np.tensordot(sset.probabilities, sset.stacked(f), axes=1)
            lo = self.means[f] + self.lower[f]
            hi = self.means[f] + self.upper[f]
            if np.any(m < lo - tol) or np.any(m > hi + tol):
                return False
        return True


def moment_ambiguity(sset: ScenarioSet, model, kappa: float = 1.0,
                     normalize_distances: bool = False) -> MomentAmbiguity:
    return MomentAmbiguity.from_statistics(moment_statistics(sset, model, kappa, normalize_distances))


# -- distances ------------------------------------------------------------------

def family_normalizers(sset: ScenarioSet) -> dict[str, float]:
    """Largest absolute value per family across all scenarios (1 when the family is all zero)."""
    out = {}
    for f in FAMILIES:
        m = float(np.max(np.abs(sset.stacked(f)), initial=0.0))
        out[f] = m if m > 0 else 1.0
    return out


def realization_distance(a, b, L: float = 1.0, normalizer: dict[str, float] | None = None) -> float:
    """Transport cost ``sum |a - b|**L`` between two realizations.

    ``a`` and ``b`` are :class:`SingleScenarioData` (each family divided by
    its normalizer first) or plain arrays.
    """
    if L < 1:
        raise AmbiguityError("norm order must be >= 1")
    if isinstance(a, SingleScenarioData):
        norm = normalizer or {f: 1.0 for f in FAMILIES}
        fa, fb = a.families(), b.families()
        total = 0.0
        for f in FAMILIES:
            if fa[f].shape != fb[f].shape:
                raise AmbiguityError(f"{f}: shape mismatch {fa[f].shape} vs {fb[f].shape}")
            total += float(np.sum(np.abs((fa[f] - fb[f]) / norm[f]) ** L))
        return total
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise AmbiguityError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sum(np.abs(a - b) ** L))


def transport_cost(cost: np.ndarray, p, q, tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Optimal transport between marginals ``p`` (rows) and ``q`` (columns)."""
    cost = np.asarray(cost, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m, n = cost.shape
    if p.shape != (m,) or q.shape != (n,):
        raise AmbiguityError("marginal sizes do not match the cost matrix")
    if np.any(p < 0) or np.any(q < 0):
        raise AmbiguityError("probabilities must be nonnegative")
    if abs(p.sum() - 1) > tol or abs(q.sum() - 1) > tol:
        raise AmbiguityError("each marginal must sum to 1")
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A[m + j, j::n] = 1.0
    res = linprog(cost.ravel(), A_eq=A, b_eq=np.concatenate([p, q]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise AmbiguityError(f"transport LP failed: {res.message}")
    return float(res.fun), res.x.reshape(m, n)


def wasserstein_distance(P, p, Q, q, L: float = 1.0, normalizer=None) -> float:
    """Type-L distance between discrete distributions with supports ``P``, ``Q``."""
    cost = np.array([[realization_distance(a, b, L, normalizer) for b in Q] for a in P])
    return transport_cost(cost, p, q)[0]


def distance_matrix(sset: ScenarioSet, rows, cols, L: float = 1.0, normalizer=None) -> np.ndarray:
    norm = normalizer or family_normalizers(sset)
    return np.array([[realization_distance(sset.scenarios[i], sset.scenarios[j], L, norm)
                      for j in cols] for i in rows])


def default_radius(D: np.ndarray) -> float:
    D = np.asarray(D)
    if D.size == 0:
        raise AmbiguityError("empty support")
    return float(D.max())


def split_supports(n_scenarios: int, k_nominal: int, seed: int) -> tuple[list[int], list[int], np.ndarray]:
    """Seeded split into decision support (rest) and nominal support (``k_nominal`` scenarios)."""
    if not 1 <= k_nominal < n_scenarios:
        raise AmbiguityError(f"k_nominal must be in [1, {n_scenarios - 1}]")
    perm = np.random.default_rng(seed).permutation(n_scenarios)
    nominal = sorted(int(i) for i in perm[:k_nominal])
    decision = sorted(int(i) for i in perm[k_nominal:])
    return decision, nominal, np.full(k_nominal, 1.0 / k_nominal)


@dataclass(frozen=True, eq=False)
class WassersteinAmbiguity:
    support_M: tuple[int, ...]
    support_K: tuple[int, ...]
    q: np.ndarray
    radius: float
    L: float
    D: np.ndarray  # (|M|, |K|)

    def __post_init__(self):
        if self.radius < 0:
            raise AmbiguityError("radius must be nonnegative")
        if self.L < 1:
            raise AmbiguityError("norm order must be >= 1")
        if not self.support_M or not self.support_K:
            raise AmbiguityError("empty support")
        if self.D.shape != (len(self.support_M), len(self.support_K)):
            raise AmbiguityError("distance matrix shape does not match the supports")
        if np.any(self.D < 0):
            raise AmbiguityError("distances must be nonnegative")
        q = np.asarray(self.q, dtype=float)
        if q.shape != (len(self.support_K),) or np.any(q < 0) or abs(q.sum() - 1) > 1e-9:
            raise AmbiguityError("nominal weights must be a distribution over the nominal support")


def wasserstein_ambiguity(sset: ScenarioSet, support_M=None, support_K=None, q=None,
                          k_nominal: int | None = None, seed: int = 0, L: float = 1.0,
                          radius: float | None = None) -> WassersteinAmbiguity:
    """Build the ball spec; supports come from arguments or a seeded split."""
    if support_M is None or support_K is None:
        if k_nominal is None:
            raise AmbiguityError("give explicit supports or k_nominal")
        support_M, support_K, q = split_supports(len(sset), k_nominal, seed)
    support_M, support_K = tuple(support_M), tuple(support_K)
    if q is None:
        q = np.full(len(support_K), 1.0 / len(support_K))
    D = distance_matrix(sset, support_M, support_K, L)
    r = default_radius(D) if radius is None else float(radius)
    return WassersteinAmbiguity(support_M, support_K, np.asarray(q, dtype=float), r, L, D)
