"""Extensive-form MILPs for the stochastic and the two distributionally robust models.

All three builders share :func:`~gridplan.builder.build_first_stage` and
one :func:`~gridplan.builder.build_operations_block` per scenario. Each
scenario's operating cost is an equality-defined variable ``op_cost(s)``
so that the risk and certificate rows stay short.

The objective is recorded as a list of weighted parts (see
:attr:`ReformulationArtifacts.parts`) so a solution can be split into its
investment, expectation, and risk contributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ambiguity import MomentAmbiguity, WassersteinAmbiguity, moment_ambiguity, wasserstein_ambiguity
from .builder import (Expr, FirstStageBlock, OperationsBlock,
                      build_first_stage, build_operations_block)
from .milp import EQ, GE, MilpInstance, make_name
from .network import EnergySystemModel
from .scenario import ScenarioSet, SingleScenarioData

SP, MDRO, WDRO, DET = "sp", "mdro", "wdro", "det"
METHODS = (DET, SP, MDRO, WDRO)
FREE = (-math.inf, math.inf)


class ReformulationError(ValueError):
    pass


@dataclass(frozen=True)
class RiskProfile:
    """Mean-CVaR weights: ``lam`` on the expectation, ``1 - lam`` on CVaR at level ``alpha``."""

    lam: float = 1.0
    alpha: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ReformulationError("lambda must lie in [0, 1]")
        if not 0.0 <= self.alpha < 1.0:
            raise ReformulationError("alpha must lie in [0, 1)")


@dataclass
class ReformulationArtifacts:
    method: str
    instance: MilpInstance
    first_stage: FirstStageBlock
    blocks: list[OperationsBlock]
    block_scenarios: list[int]
    op_cost: list[int]
    risk: RiskProfile
    parts: list[tuple[str, float, Expr]] = field(default_factory=list)
    duals: dict[str, list[int]] = field(default_factory=dict)
    psi_obj: np.ndarray | None = None
    psi_cntr: np.ndarray | None = None
    psi_index: list[int] = field(default_factory=list)
    scenarios: ScenarioSet | None = None
    weights: np.ndarray | None = None  # empirical weight of each block, used for reporting

    def decomposition(self, x: np.ndarray) -> dict[str, float]:
        """Weighted value of each objective part; sums to the objective."""
        out: dict[str, float] = {}
        for name, weight, expr in self.parts:
            out[name] = out.get(name, 0.0) + weight * expr.value(x)
        return out

    def first_stage_values(self, x: np.ndarray) -> dict[str, float]:
        return {n: float(x[j]) for n, j in zip(self.first_stage.names, self.first_stage.indices)}


def _expr(pairs=(), const: float = 0.0) -> Expr:
    e = Expr()
    for j, c in pairs:
        e.add(j, c)
    e.const = const
    return e


def _apply_parts(inst: MilpInstance, parts) -> None:
    for _, weight, expr in parts:
        if weight == 0.0:
            continue
        for j, c in expr.items():
            inst.add_objective(j, weight * c)
        inst.obj_constant += weight * expr.const


def _scenario_blocks(model, sset: ScenarioSet, indices, inst, fs):
    blocks, theta = [], []
    for s in indices:
        tag = f"s{s}"
        b = build_operations_block(model, sset.time, sset.scenarios[s], fs, inst, tag)
        th = inst.add_var(make_name("op_cost", tag), *FREE)
        coefs = [(th, 1.0)] + [(j, -c) for j, c in b.cost.items()]
        inst.add_row(make_name("op_cost", tag), coefs, EQ, b.cost.const)
        blocks.append(b)
        theta.append(th)
    return blocks, theta


def _first_stage_part(fs: FirstStageBlock) -> Expr:
    e = Expr()
    for c in fs.costs.values():
        for j, v in c.items():
            e.add(j, v)
        e.const += c.const
    return e


def _new_instance(model: EnergySystemModel, sset: ScenarioSet, name: str):
    sset.check_model(model)
    inst = MilpInstance(name)
    fs = build_first_stage(model, inst)
    # first-stage costs are already in the objective; parts only record them
    return inst, fs


def build_sp_ef(model: EnergySystemModel, sset: ScenarioSet, risk: RiskProfile | None = None) -> ReformulationArtifacts:
    risk = risk or RiskProfile()
    inst, fs = _new_instance(model, sset, "sp")
    idx = list(range(len(sset)))
    blocks, theta = _scenario_blocks(model, sset, idx, inst, fs)
    p = sset.probabilities
    eta = inst.add_var("var_level", *FREE)
    excess = []
    for s, th in zip(idx, theta):
        v = inst.add_var(make_name("cost_excess", f"s{s}"))
        inst.add_row(make_name("risk_excess", f"s{s}"), [(v, 1.0), (th, -1.0), (eta, 1.0)], GE, 0.0)
        excess.append(v)
    expectation = _expr(zip(theta, p))
    cvar = _expr([(eta, 1.0)] + [(v, ps / (1 - risk.alpha)) for v, ps in zip(excess, p)])
    parts = [("expectation", risk.lam, expectation), ("cvar", 1 - risk.lam, cvar)]
    _apply_parts(inst, parts)
    parts.insert(0, ("first_stage", 1.0, _first_stage_part(fs)))
    return ReformulationArtifacts(SP, inst, fs, blocks, idx, theta, risk, parts,
                                  {"var_level": [eta], "cost_excess": excess},
                                  scenarios=sset, weights=np.asarray(p, dtype=float))


# -- moment-based DRO ------------------------------------------------------------

def _dual_layout(model: EnergySystemModel, sset: ScenarioSet):
    """(family, label, index tuple) for every entry that carries a pair of duals."""
    out = []
    T = sset.time.n_hours
    for i, n in enumerate(sset.power_nodes):
        for t in range(T):
            out.append(("power", (n, t), (i, t)))
    for v, nu in enumerate(sset.vre_types):
        for i, n in enumerate(sset.power_nodes):
            for t in range(T):
                out.append(("cf", (nu, n, t), (v, i, t)))
    if model.joint:
        for k, g in enumerate(sset.gas_nodes):
            for d in range(sset.time.n_rep_days):
                out.append(("gas", (g, d), (k, d)))
    return out


_DUAL_NAMES = {"power": ("dem_up", "dem_lo"), "cf": ("cf_up", "cf_lo"), "gas": ("gas_up", "gas_lo")}


def psi_terms(model: EnergySystemModel, sset: ScenarioSet, moment: MomentAmbiguity):
    """Coefficient vector of the dual objective form and the scenario-by-dual matrix.

    Duals are ordered as ``[upper-side duals..., lower-side duals...]`` over
    :func:`_dual_layout`. Scenario row ``s`` has ``+value`` on the upper-side
    dual and ``-value`` on the lower-side dual of each entry; the objective
    form has ``mean + upper deviation`` and ``-(mean + lower deviation)``.
    """
    layout = _dual_layout(model, sset)
    m = len(layout)
    obj = np.zeros(2 * m)
    cntr = np.zeros((len(sset), 2 * m))
    for e, (fam, _, ix) in enumerate(layout):
        mu = moment.means[fam][ix]
        obj[e] = mu + moment.upper[fam][ix]
        obj[m + e] = -(mu + moment.lower[fam][ix])
        for s, sc in enumerate(sset.scenarios):
            val = sc.families()[fam][ix]
            cntr[s, e] = val
            cntr[s, m + e] = -val
    return obj, cntr


def _add_duals(inst: MilpInstance, layout, suffix: str = "", fixed_zero: bool = False) -> list[int]:
    ub = 0.0 if fixed_zero else math.inf
    up, lo = [], []
    for fam, label, _ in layout:
        nu, nl = _DUAL_NAMES[fam]
        up.append(inst.add_var(make_name(nu + suffix, *label), 0.0, ub))
        lo.append(inst.add_var(make_name(nl + suffix, *label), 0.0, ub))
    return up + lo


def build_mdro_ef(model: EnergySystemModel, sset: ScenarioSet, moment: MomentAmbiguity,
                  risk: RiskProfile | None = None, separate_duals: bool = False,
                  zero_duals: bool = False) -> ReformulationArtifacts:
    """Moment-based DRO extensive form.

    By default one certificate (duals, ``xi``, ``delta``) is shared by the
    expectation and CVaR terms. ``separate_duals=True`` builds an
    independent certificate for each term instead. ``zero_duals=True``
    pins every box dual to 0, which leaves the scenario-max robust model.
    """
    risk = risk or RiskProfile()
    for fam in ("power", "cf") + (("gas",) if model.joint else ()):
        if moment.means[fam].shape != sset.stacked(fam).shape[1:]:
            raise ReformulationError(f"{fam}: moment data does not match the scenario set")
    inst, fs = _new_instance(model, sset, "mdro")
    idx = list(range(len(sset)))
    blocks, theta = _scenario_blocks(model, sset, idx, inst, fs)
    layout = _dual_layout(model, sset)
    psi_obj, psi_cntr = psi_terms(model, sset, moment)
    a = risk.alpha

    if not separate_duals:
        duals = _add_duals(inst, layout, fixed_zero=zero_duals)
        xi = inst.add_var("xi", *FREE)
        delta = inst.add_var("delta", *FREE)
        for s in idx:
            row = list(zip(duals, psi_cntr[s]))
            inst.add_row(make_name("dro_cut", "support", f"s{s}"), row + [(xi, 1.0)], GE, 0.0)
            inst.add_row(make_name("dro_cut", "cost", f"s{s}"),
                         row + [(delta, 1.0), (theta[s], -1.0)], GE, 0.0)
        psi = _expr(zip(duals, psi_obj))
        parts = [
            ("expectation", risk.lam, psi),
            ("certificate", 1.0, _expr([(delta, 1.0)])),
            ("cvar", 1 - risk.lam, _expr([(xi, a / (1 - a))] + [(j, c / (1 - a)) for j, c in zip(duals, psi_obj)])),
        ]
        dual_map = {"duals": duals, "xi": [xi], "delta": [delta]}
        index = duals
    else:
        d1 = _add_duals(inst, layout, "_e", zero_duals)
        d2 = _add_duals(inst, layout, "_r", zero_duals)
        xi1 = inst.add_var("xi_e", *FREE)
        xi2 = inst.add_var("xi_r", *FREE)
        eta = inst.add_var("var_level", *FREE)
        for s in idx:
            inst.add_row(make_name("dro_cut", "mean", f"s{s}"),
                         list(zip(d1, psi_cntr[s])) + [(xi1, 1.0), (theta[s], -1.0)], GE, 0.0)
            r2 = list(zip(d2, psi_cntr[s])) + [(xi2, 1.0)]
            inst.add_row(make_name("dro_cut", "tail", f"s{s}"), r2 + [(theta[s], -1.0), (eta, 1.0)], GE, 0.0)
            inst.add_row(make_name("dro_cut", "support", f"s{s}"), r2, GE, 0.0)
        parts = [
            ("expectation", risk.lam, _expr(list(zip(d1, psi_obj)) + [(xi1, 1.0)])),
            ("cvar", 1 - risk.lam, _expr([(eta, 1.0), (xi2, 1 / (1 - a))]
                                         + [(j, c / (1 - a)) for j, c in zip(d2, psi_obj)])),
        ]
        dual_map = {"duals_e": d1, "duals_r": d2, "xi": [xi1, xi2], "var_level": [eta]}
        index = d1
    _apply_parts(inst, parts)
    parts.insert(0, ("first_stage", 1.0, _first_stage_part(fs)))
    return ReformulationArtifacts(MDRO, inst, fs, blocks, idx, theta, risk, parts, dual_map,
                                  psi_obj, psi_cntr, index, sset, np.asarray(sset.probabilities, dtype=float))


# -- Wasserstein DRO ------------------------------------------------------------------

def build_wdro_ef(model: EnergySystemModel, sset: ScenarioSet, wass: WassersteinAmbiguity,
                  risk: RiskProfile | None = None) -> ReformulationArtifacts:
    risk = risk or RiskProfile()
    n = len(sset)
    if any(not 0 <= i < n for i in wass.support_M + wass.support_K):
        raise ReformulationError("support index outside the scenario set")
    # cheapest transport from the nominal support onto the decision support
    reach = float(np.dot(wass.q, wass.D.min(axis=0)))
    if reach > wass.radius * (1 + 1e-12) + 1e-12:
        raise ReformulationError(f"radius {wass.radius:g} is below {reach:g}: the ball holds no "
                                 "distribution on the decision support")
    inst, fs = _new_instance(model, sset, "wdro")
    idx = list(wass.support_M)
    blocks, theta = _scenario_blocks(model, sset, idx, inst, fs)
    b1 = inst.add_var("radius_price")
    b2 = [inst.add_var(make_name("nominal_price", f"s{j}"), *FREE) for j in wass.support_K]
    eta = inst.add_var("var_level", *FREE)
    for a, i in enumerate(idx):
        for b, j in enumerate(wass.support_K):
            base = [(b1, float(wass.D[a, b])), (b2[b], 1.0)]
            tag = (f"s{i}", f"s{j}")
            inst.add_row(make_name("dro_cut", "mean", *tag), base + [(theta[a], -1.0)], GE, 0.0)
            inst.add_row(make_name("dro_cut", "tail", *tag), base + [(theta[a], -1.0), (eta, 1.0)], GE, 0.0)
            if wass.D[a, b] != 0.0:
                inst.add_row(make_name("dro_cut", "support", *tag), base, GE, 0.0)
            else:
                inst.add_row(make_name("dro_cut", "support", *tag), [(b2[b], 1.0)], GE, 0.0)
    cert = _expr([(b1, wass.radius)] + list(zip(b2, wass.q)))
    a_ = risk.alpha
    cvar = _expr([(b1, wass.radius / (1 - a_))] + [(j, qj / (1 - a_)) for j, qj in zip(b2, wass.q)]
                 + [(eta, 1.0)])
    parts = [("expectation", risk.lam, cert), ("cvar", 1 - risk.lam, cvar)]
    _apply_parts(inst, parts)
    parts.insert(0, ("first_stage", 1.0, _first_stage_part(fs)))
    return ReformulationArtifacts(WDRO, inst, fs, blocks, idx, theta, risk, parts,
                                  {"radius_price": [b1], "nominal_price": b2, "var_level": [eta]},
                                  scenarios=sset, weights=np.full(len(idx), 1.0 / len(idx)))


def build_deterministic_ef(model: EnergySystemModel, sset: ScenarioSet,
                           data: SingleScenarioData | None = None) -> ReformulationArtifacts:
    """Single-realization model (the mean realization unless ``data`` is given)."""
    data = sset.mean_realization() if data is None else data
    single = sset.with_scenarios([data], np.ones(1))
    art = build_sp_ef(model, single, RiskProfile(1.0, 0.0))
    art.method = DET
    art.instance.name = "deterministic"
    return art


def build_method(method: str, model: EnergySystemModel, sset: ScenarioSet, risk: RiskProfile | None = None,
                 *, kappa: float = 1.0, normalize_distances: bool = False, separate_duals: bool = False,
                 k_nominal: int | None = None, seed: int = 0, L: float = 1.0, radius: float | None = None,
                 support_M=None, support_K=None) -> ReformulationArtifacts:
    """Build any of the formulations from one set of keyword settings."""
    if method == DET:
        return build_deterministic_ef(model, sset)
    if method == SP:
        return build_sp_ef(model, sset, risk)
    if method == MDRO:
        moment = moment_ambiguity(sset, model, kappa, normalize_distances)
        return build_mdro_ef(model, sset, moment, risk, separate_duals)
    if method == WDRO:
        if support_M is None and k_nominal is None:
            support_M = support_K = range(len(sset))
        wass = wasserstein_ambiguity(sset, support_M, support_K, None, k_nominal, seed, L, radius)
        return build_wdro_ef(model, sset, wass, risk)
    raise ReformulationError(f"unknown method {method!r}; choose from {METHODS}")
