"""Scenario data with representative-day structure, moment statistics, and generators.

Array layout used throughout:

* ``power_demand``: ``(n_power_nodes, n_hours)`` in MWh per representative hour
* ``gas_demand``: ``(n_gas_nodes, n_rep_days)`` in MMBtu per representative day
* ``capacity_factor``: ``(n_vre_types, n_power_nodes, n_hours)``, unitless

Hours are numbered ``0 .. n_rep_days * hours_per_day - 1``; hour ``t``
belongs to representative day ``t // hours_per_day``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

S1D0 = "S1D0"  # demand fixed to the reference scenario
S0D1 = "S0D1"  # supply (capacity factors) fixed to the reference scenario
ABLATIONS = (S1D0, S0D1)

MMBTU_PER_MWH = 3.412
EARTH_RADIUS_KM = 6371.0


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TimeStructure:
    """Representative days and the calendar-day mapping onto them."""

    hours_per_day: int
    day_map: tuple[int, ...]

    def __post_init__(self):
        if self.hours_per_day < 1:
            raise ScenarioError("hours_per_day must be positive")
        if not self.day_map:
            raise ScenarioError("day_map is empty")
        r = max(self.day_map) + 1
        used = set(self.day_map)
        if min(self.day_map) < 0 or used != set(range(r)):
            missing = sorted(set(range(r)) - used)
            raise ScenarioError(f"representative days {missing} have no calendar day")

    @classmethod
    def uniform(cls, n_rep_days: int, hours_per_day: int = 24, days_per_rep: int = 1) -> "TimeStructure":
        return cls(hours_per_day, tuple(d for d in range(n_rep_days) for _ in range(days_per_rep)))

    @property
    def n_rep_days(self) -> int:
        return max(self.day_map) + 1

    @property
    def n_hours(self) -> int:
        return self.n_rep_days * self.hours_per_day

    @property
    def n_calendar_days(self) -> int:
        return len(self.day_map)

    def day_weights(self) -> np.ndarray:
        """Number of calendar days each representative day stands for."""
        return np.bincount(np.asarray(self.day_map), minlength=self.n_rep_days).astype(float)

    def hour_weights(self) -> np.ndarray:
        return np.repeat(self.day_weights(), self.hours_per_day)

    def day_of_hour(self, t: int) -> int:
        return t // self.hours_per_day

    def hours_of_day(self, tau: int) -> range:
        return range(tau * self.hours_per_day, (tau + 1) * self.hours_per_day)

    def is_day_start(self, t: int) -> bool:
        return t % self.hours_per_day == 0


@dataclass(frozen=True, eq=False)
class SingleScenarioData:
    power_demand: np.ndarray
    gas_demand: np.ndarray
    capacity_factor: np.ndarray

    def families(self) -> dict[str, np.ndarray]:
        return {"power": self.power_demand, "gas": self.gas_demand, "cf": self.capacity_factor}

    def flat(self) -> np.ndarray:
        return np.concatenate([self.power_demand.ravel(), self.gas_demand.ravel(),
                               self.capacity_factor.ravel()])

    def equals(self, other: "SingleScenarioData") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.families().values(),
                                                         other.families().values()))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    power_nodes: tuple[str, ...]
    gas_nodes: tuple[str, ...]
    vre_types: tuple[str, ...]
    time: TimeStructure
    scenarios: tuple[SingleScenarioData, ...]
    probabilities: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.scenarios:
            raise ScenarioError("scenario set is empty")
        p = self.probabilities
        if p is None:
            p = np.full(len(self.scenarios), 1.0 / len(self.scenarios))
        p = np.asarray(p, dtype=float)
        object.__setattr__(self, "probabilities", p)
        if p.shape != (len(self.scenarios),):
            raise ScenarioError("one probability per scenario is required")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ScenarioError(f"probabilities must be nonnegative and sum to 1 (sum {p.sum()!r})")
        shapes = {
            "power_demand": (len(self.power_nodes), self.time.n_hours),
            "gas_demand": (len(self.gas_nodes), self.time.n_rep_days),
            "capacity_factor": (len(self.vre_types), len(self.power_nodes), self.time.n_hours),
        }
        for s, sc in enumerate(self.scenarios):
            for name, shape in shapes.items():
                arr = getattr(sc, name)
                if arr.shape != shape:
                    raise ScenarioError(f"scenario {s}: {name} has shape {arr.shape}, expected {shape}")
                if not np.all(np.isfinite(arr)):
                    raise ScenarioError(f"scenario {s}: {name} has non-finite values")
                if np.any(arr < 0):
                    raise ScenarioError(f"scenario {s}: negative {name}")
            if np.any(sc.capacity_factor > 1):
                raise ScenarioError(f"scenario {s}: capacity factor above 1")

    def __len__(self) -> int:
        return len(self.scenarios)

    def stacked(self, family: str) -> np.ndarray:
        """Scenario-major stack of one family: ``(S, ...)``."""
        return np.stack([sc.families()[family] for sc in self.scenarios])

    def subset(self, indices, renormalize: bool = True) -> "ScenarioSet":
        indices = list(indices)
        p = self.probabilities[indices]
        if renormalize:
            p = p / p.sum()
        return replace(self, scenarios=tuple(self.scenarios[i] for i in indices), probabilities=p)

    def with_probabilities(self, p) -> "ScenarioSet":
        return replace(self, probabilities=np.asarray(p, dtype=float))

    def mean_realization(self) -> SingleScenarioData:
        p = self.probabilities
        return SingleScenarioData(*(np.tensordot(p, self.stacked(f), axes=1)
                                    for f in ("power", "gas", "cf")))

    def single(self, s: int) -> "ScenarioSet":
        return replace(self, scenarios=(self.scenarios[s],), probabilities=np.ones(1))

    def with_scenarios(self, scenarios, probabilities=None) -> "ScenarioSet":
        return replace(self, scenarios=tuple(scenarios), probabilities=probabilities)

    def check_model(self, model) -> None:
        """Raise unless node and VRE-type orderings match ``model``."""
        if tuple(model.power_node_ids()) != self.power_nodes:
            raise ScenarioError("power nodes differ from the network model")
        if model.joint and tuple(model.gas_node_ids()) != self.gas_nodes:
            raise ScenarioError("gas nodes differ from the network model")
        if tuple(p.id for p in model.vre_types) != self.vre_types:
            raise ScenarioError("VRE types differ from the network model")


# -- moment statistics -----------------------------------------------------------

def compute_means(sset: ScenarioSet) -> dict[str, np.ndarray]:
    """Probability-weighted mean per family and index."""
    if len(sset) == 0:
        raise ScenarioError("empty scenario set")
    p = sset.probabilities
    return {f: np.tensordot(p, sset.stacked(f), axes=1) for f in ("power", "gas", "cf")}


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0 when either series is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ScenarioError("series lengths differ")
    if a.size < 2:
        raise ScenarioError("need at least two time points")
    da, db = a - a.mean(), b - b.mean()
    na, nb = math.sqrt(float(da @ da)), math.sqrt(float(db @ db))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def correlation_matrix(series: np.ndarray) -> np.ndarray:
    """Scenario-averaged node-by-node correlation for ``(S, nodes, time)`` data."""
    s_count, n, _ = series.shape
    rho = np.zeros((n, n))
    for s in range(s_count):
        for i in range(n):
            rho[i, i] += 1.0
            for j in range(i + 1, n):
                r = pearson(series[s, i], series[s, j])
                rho[i, j] += r
                rho[j, i] += r
    return rho / s_count


def compute_correlations(sset: ScenarioSet) -> dict[str, np.ndarray]:
    """``power``: (N, N); ``gas``: (K, K); ``cf``: (V, N, N)."""
    out = {"power": correlation_matrix(sset.stacked("power"))}
    gas = sset.stacked("gas")
    if gas.shape[1] and gas.shape[2] >= 2:
        out["gas"] = correlation_matrix(gas)
    else:
        out["gas"] = np.eye(gas.shape[1])
    cf = sset.stacked("cf")
    out["cf"] = np.stack([correlation_matrix(cf[:, v]) for v in range(cf.shape[1])]) \
        if cf.shape[1] else np.zeros((0, cf.shape[2], cf.shape[2]))
    return out


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def compute_inverse_distances(coords, normalize: bool = False) -> np.ndarray:
    """Matrix of 1 / haversine distance; the diagonal is 0."""
    n = len(coords)
    ell = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = haversine_km(coords[i], coords[j])
            if d == 0.0:
                raise ScenarioError(f"nodes {i} and {j} share coordinates")
            ell[i, j] = ell[j, i] = 1.0 / d
    if normalize and n > 1:
        ell = ell / ell.max()
    return ell


def node_deviation(rho_row, ell_row, kappa: float) -> tuple[float, float]:
    """(lower, upper) deviation for one node from its correlations and inverse distances to the others."""
    if kappa < 0:
        raise ScenarioError("kappa must be nonnegative")
    neg = [kappa * l * r for r, l in zip(rho_row, ell_row) if r < 0]
    pos = [kappa * l * r for r, l in zip(rho_row, ell_row) if r >= 0]
    lower = min(neg) if neg else 0.0
    upper = max(pos) if pos else 0.0
    return min(lower, 0.0), max(upper, 0.0)


def compute_deviations(rho: np.ndarray, ell: np.ndarray, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    n = rho.shape[0]
    lo, hi = np.zeros(n), np.zeros(n)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        lo[i], hi[i] = node_deviation(rho[i, others], ell[i, others], kappa)
    return lo, hi


@dataclass(frozen=True, eq=False)
class MomentStatistics:
    means: dict[str, np.ndarray]
    correlations: dict[str, np.ndarray]
    inverse_distances: dict[str, np.ndarray]
    lower: dict[str, np.ndarray]  # per node: power (N,), gas (K,), cf (V, N)
    upper: dict[str, np.ndarray]
    kappa: float


def moment_statistics(sset: ScenarioSet, model, kappa: float = 1.0,
                      normalize_distances: bool = False) -> MomentStatistics:
    sset.check_model(model)
    means = compute_means(sset)
    rho = compute_correlations(sset)
    ell_p = compute_inverse_distances([(n.lat, n.lon) for n in model.power_nodes], normalize_distances)
    gas_nodes = model.gas_nodes if sset.gas_nodes else ()
    ell_g = compute_inverse_distances([(k.lat, k.lon) for k in gas_nodes], normalize_distances)
    lower, upper = {}, {}
    lower["power"], upper["power"] = compute_deviations(rho["power"], ell_p, kappa)
    lower["gas"], upper["gas"] = compute_deviations(rho["gas"], ell_g, kappa)
    cf_lo, cf_hi = [], []
    for v in range(len(sset.vre_types)):
        lo, hi = compute_deviations(rho["cf"][v], ell_p, kappa)
        cf_lo.append(lo)
        cf_hi.append(hi)
    n = len(sset.power_nodes)
    lower["cf"] = np.array(cf_lo).reshape(-1, n)
    upper["cf"] = np.array(cf_hi).reshape(-1, n)
    return MomentStatistics(means, rho, {"power": ell_p, "gas": ell_g, "cf": ell_p},
                            lower, upper, kappa)


# -- reference scenario and ablations -------------------------------------------

def aggregate_demand(sset: ScenarioSet, mmbtu_per_mwh: float = MMBTU_PER_MWH) -> np.ndarray:
    """Per-scenario weighted power demand plus gas demand converted to MWh."""
    w = sset.time.hour_weights()
    wd = sset.time.day_weights()
    power = np.array([float((sc.power_demand.sum(axis=0) * w).sum()) for sc in sset.scenarios])
    gas = np.array([float((sc.gas_demand.sum(axis=0) * wd).sum()) for sc in sset.scenarios])
    return power + gas / mmbtu_per_mwh


def closest_to_median(values) -> int:
    values = np.asarray(values, dtype=float)
    med = float(np.median(values))
    dist = np.abs(values - med)
    return int(np.flatnonzero(dist == dist.min())[0])


def select_reference_scenario(sset: ScenarioSet, mmbtu_per_mwh: float = MMBTU_PER_MWH) -> int:
    return closest_to_median(aggregate_demand(sset, mmbtu_per_mwh))


def ablate(sset: ScenarioSet, mode: str, reference: int) -> ScenarioSet:
    if mode not in ABLATIONS:
        raise ScenarioError(f"unknown ablation {mode!r}; choose from {ABLATIONS}")
    if not 0 <= reference < len(sset):
        raise ScenarioError(f"reference {reference} not in scenario set")
    ref = sset.scenarios[reference]
    out = []
    for sc in sset.scenarios:
        if mode == S1D0:
            out.append(SingleScenarioData(ref.power_demand.copy(), ref.gas_demand.copy(),
                                          sc.capacity_factor.copy()))
        else:
            out.append(SingleScenarioData(sc.power_demand.copy(), sc.gas_demand.copy(),
                                          ref.capacity_factor.copy()))
    return replace(sset, scenarios=tuple(out), probabilities=sset.probabilities.copy())


# -- CSV I/O ----------------------------------------------------------------

_HEADER = ["scenario", "node", "period", "value"]


def _write_family(path: Path, nodes, arrays) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_HEADER)
        for s, arr in enumerate(arrays):
            for i, node in enumerate(nodes):
                for t, v in enumerate(arr[i]):
                    w.writerow([s, node, t, repr(float(v))])


def _read_family(path: Path, nodes, n_periods: int, n_scen: int) -> list[np.ndarray]:
    out = [np.full((len(nodes), n_periods), np.nan) for _ in range(n_scen)]
    pos = {n: i for i, n in enumerate(nodes)}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _HEADER:
            raise ScenarioError(f"{path.name}: header must be {','.join(_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                s, node, t, v = int(row[0]), row[1], int(row[2]), float(row[3])
            except (ValueError, IndexError):
                raise ScenarioError(f"{path.name}:{lineno}: malformed row {row!r}") from None
            if node not in pos or not 0 <= s < n_scen or not 0 <= t < n_periods:
                raise ScenarioError(f"{path.name}:{lineno}: index out of range")
            out[s][pos[node], t] = v
    for s, arr in enumerate(out):
        if np.isnan(arr).any():
            raise ScenarioError(f"{path.name}: scenario {s} is missing periods")
    return out


def save_scenarios(sset: ScenarioSet, directory: str | Path) -> None:
    """Write ``scenarios.json`` (structure) plus one CSV per family."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "power_nodes": list(sset.power_nodes),
        "gas_nodes": list(sset.gas_nodes),
        "vre_types": list(sset.vre_types),
        "hours_per_day": sset.time.hours_per_day,
        "day_map": list(sset.time.day_map),
        "probabilities": [float(p) for p in sset.probabilities],
    }
    (d / "scenarios.json").write_text(json.dumps(meta, indent=2) + "\n")
    _write_family(d / "power_demand.csv", sset.power_nodes, [sc.power_demand for sc in sset.scenarios])
    _write_family(d / "gas_demand.csv", sset.gas_nodes, [sc.gas_demand for sc in sset.scenarios])
    for v, name in enumerate(sset.vre_types):
        _write_family(d / f"capacity_factor_{name}.csv", sset.power_nodes,
                      [sc.capacity_factor[v] for sc in sset.scenarios])


def load_scenarios(directory: str | Path) -> ScenarioSet:
    d = Path(directory)
    try:
        meta = json.loads((d / "scenarios.json").read_text())
    except FileNotFoundError:
        raise ScenarioError(f"{d}: scenarios.json not found") from None
    time = TimeStructure(int(meta["hours_per_day"]), tuple(meta["day_map"]))
    probs = np.asarray(meta["probabilities"], dtype=float)
    n = len(probs)
    power = _read_family(d / "power_demand.csv", meta["power_nodes"], time.n_hours, n)
    if meta["gas_nodes"]:
        gas = _read_family(d / "gas_demand.csv", meta["gas_nodes"], time.n_rep_days, n)
    else:
        gas = [np.zeros((0, time.n_rep_days)) for _ in range(n)]
    cfs = [_read_family(d / f"capacity_factor_{v}.csv", meta["power_nodes"], time.n_hours, n)
           for v in meta["vre_types"]]
    scen = []
    for s in range(n):
        cf = np.stack([c[s] for c in cfs]) if cfs else np.zeros((0, len(meta["power_nodes"]), time.n_hours))
        scen.append(SingleScenarioData(power[s], gas[s], cf))
    return ScenarioSet(tuple(meta["power_nodes"]), tuple(meta["gas_nodes"]), tuple(meta["vre_types"]),
                       time, tuple(scen), probs)


# -- synthetic generator ------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Shape and noise settings for :func:`generate_synthetic`.

    ``vre_kinds`` maps each VRE type to ``"solar"`` or ``"wind"``. Noise is
    additive, scaled by ``noise`` times the node's base level, correlated
    across nodes as ``spatial_corr ** |i - j|`` and AR(1) in time.
    ``level_shift`` draws one multiplicative demand level per scenario.
    ``wind_phase`` shifts each node's diurnal wind cycle (radians), which
    is how anti-correlated sites are produced.
    """

    power_nodes: tuple[str, ...]
    gas_nodes: tuple[str, ...]
    vre_types: tuple[str, ...]
    vre_kinds: tuple[str, ...]
    n_scenarios: int
    n_rep_days: int = 5
    hours_per_day: int = 24
    days_per_rep: int = 1
    base_power: tuple[float, ...] = ()
    base_gas: tuple[float, ...] = ()
    noise: float = 0.1
    spatial_corr: float = 0.8
    temporal_corr: float = 0.5
    level_shift: float = 0.0
    cf_noise: float = 0.1
    wind_phase: tuple[float, ...] = ()
    cf_spatial_corr: float | None = None  # defaults to spatial_corr

    def __post_init__(self):
        if self.n_scenarios < 1 or self.n_rep_days < 1 or self.hours_per_day < 2:
            raise ScenarioError("n_scenarios, n_rep_days must be >= 1 and hours_per_day >= 2")
        if len(self.vre_types) != len(self.vre_kinds):
            raise ScenarioError("vre_kinds must give one kind per VRE type")
        if any(k not in ("solar", "wind") for k in self.vre_kinds):
            raise ScenarioError("vre kinds must be 'solar' or 'wind'")
        if self.base_power and len(self.base_power) != len(self.power_nodes):
            raise ScenarioError("base_power needs one value per power node")
        if self.base_gas and len(self.base_gas) != len(self.gas_nodes):
            raise ScenarioError("base_gas needs one value per gas node")
        if self.wind_phase and len(self.wind_phase) != len(self.power_nodes):
            raise ScenarioError("wind_phase needs one value per power node")
        cf_rho = self.spatial_corr if self.cf_spatial_corr is None else self.cf_spatial_corr
        if not -1 < self.spatial_corr < 1 or not -1 < cf_rho < 1 or not 0 <= self.temporal_corr < 1:
            raise ScenarioError("spatial correlations must be in (-1, 1) and temporal_corr in [0, 1)")
        if min(self.noise, self.cf_noise, self.level_shift) < 0:
            raise ScenarioError("noise levels must be nonnegative")


def _correlated_noise(rng: np.random.Generator, n: int, length: int, rho: float, phi: float) -> np.ndarray:
    """Unit-variance noise (n, length): corr rho**|i-j| across rows, AR(1) phi along columns."""
    if n == 0:
        return np.zeros((0, length))
    idx = np.arange(n)
    cov = rho ** np.abs(idx[:, None] - idx[None, :])
    chol = np.linalg.cholesky(cov)
    eta = chol @ rng.standard_normal((n, length))
    out = np.empty_like(eta)
    out[:, 0] = eta[:, 0]
    scale = math.sqrt(1 - phi * phi)
    for t in range(1, length):
        out[:, t] = phi * out[:, t - 1] + scale * eta[:, t]
    return out


def base_profiles(spec: SyntheticSpec) -> SingleScenarioData:
    """Noise-free demand and capacity-factor shapes."""
    H, R = spec.hours_per_day, spec.n_rep_days
    hour = np.tile(np.arange(H), R)
    day = np.repeat(np.arange(R), H)
    season = 1 + 0.15 * np.cos(2 * np.pi * day / max(R, 1))
    diurnal = 1 + 0.25 * np.sin(2 * np.pi * (hour - 9) / H)
    base_p = np.asarray(spec.base_power or [100.0] * len(spec.power_nodes), dtype=float)
    power = base_p[:, None] * (diurnal * season)[None, :]
    base_g = np.asarray(spec.base_gas or [1000.0] * len(spec.gas_nodes), dtype=float)
    gas = base_g[:, None] * (1 + 0.3 * np.cos(2 * np.pi * np.arange(R) / R))[None, :]
    cfs = []
    for kind in spec.vre_kinds:
        if kind == "solar":
            shape = np.clip(np.sin(np.pi * (hour - H / 4) / (H / 2)), 0, None) * 0.8
            shape = shape * (1 - 0.2 * np.cos(2 * np.pi * day / R + np.pi))
            shape[shape < 1e-9] = 0.0  # sin(pi) round-off at the edges of the daylight window
            cfs.append(np.tile(shape, (len(spec.power_nodes), 1)))
        else:
            phase = np.asarray(spec.wind_phase or [0.0] * len(spec.power_nodes), dtype=float)
            daily = np.sin(2 * np.pi * hour[None, :] / H + phase[:, None])
            cfs.append(0.35 + 0.1 * daily + 0.1 * np.cos(2 * np.pi * day / R)[None, :])
    cf = np.stack(cfs) if cfs else np.zeros((0, len(spec.power_nodes), H * R))
    return SingleScenarioData(power, gas, np.clip(cf, 0, 1))


def generate_synthetic(spec: SyntheticSpec, seed: int) -> ScenarioSet:
    """Deterministic synthetic scenario set for ``seed``."""
    rng = np.random.default_rng(seed)
    base = base_profiles(spec)
    T = spec.n_rep_days * spec.hours_per_day
    N, K = len(spec.power_nodes), len(spec.gas_nodes)
    cf_rho = spec.spatial_corr if spec.cf_spatial_corr is None else spec.cf_spatial_corr
    scen = []
    for _ in range(spec.n_scenarios):
        level = 1 + spec.level_shift * rng.standard_normal()
        level = max(level, 0.0)
        eps_p = _correlated_noise(rng, N, T, spec.spatial_corr, spec.temporal_corr)
        scale_p = base.power_demand.mean(axis=1, keepdims=True)
        power = level * base.power_demand + spec.noise * scale_p * eps_p
        eps_g = _correlated_noise(rng, K, spec.n_rep_days, spec.spatial_corr, spec.temporal_corr)
        scale_g = base.gas_demand.mean(axis=1, keepdims=True) if K else 0.0
        gas = level * base.gas_demand + spec.noise * scale_g * eps_g
        cf = base.capacity_factor.copy()
        for v, kind in enumerate(spec.vre_kinds):
            eps = _correlated_noise(rng, N, T, cf_rho, spec.temporal_corr)
            if kind == "solar":
                cf[v] = cf[v] * (1 + spec.cf_noise * eps)  # stays dark at night
            else:
                cf[v] = cf[v] + spec.cf_noise * eps
        scen.append(SingleScenarioData(np.clip(power, 0, None), np.clip(gas, 0, None),
                                       np.clip(cf, 0, 1)))
    time = TimeStructure.uniform(spec.n_rep_days, spec.hours_per_day, spec.days_per_rep)
    return ScenarioSet(tuple(spec.power_nodes), tuple(spec.gas_nodes), tuple(spec.vre_types),
                       time, tuple(scen))
