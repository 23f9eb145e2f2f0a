import numpy as np
import pytest

from gridplan.ambiguity import MomentAmbiguity, moment_ambiguity, wasserstein_ambiguity
from gridplan.builder import build_deterministic
from gridplan.evaluate import evaluate_scenarios
from gridplan.fixtures import fixture_model, fixture_scenarios
from gridplan.milp import SolveOptions, dumps_lp, fix_variables, loads_lp, solve
from gridplan.network import POWER_ONLY, THERMAL, EnergySystemModel, PlantType, PowerNode
from gridplan.reformulate import (MDRO, SP, WDRO, ReformulationError, RiskProfile, build_deterministic_ef,
                                  build_mdro_ef, build_method, build_sp_ef, build_wdro_ef, psi_terms)
from gridplan.scenario import ScenarioSet, SingleScenarioData, TimeStructure

OPTS = SolveOptions(mip_gap=1e-9)
DIMS = dict(n_rep_days=2, hours_per_day=4)


@pytest.fixture(scope="module")
def model():
    return fixture_model()


@pytest.fixture(scope="module")
def three(model):
    return fixture_scenarios(3, 3, **DIMS)


@pytest.fixture(scope="module")
def two():
    return fixture_scenarios(5, 2, **DIMS)


def objective(art):
    res = solve(art.instance, OPTS)
    assert res.status == "optimal"
    return res


@pytest.fixture(scope="module")
def sp_three(model, three):
    art = build_sp_ef(model, three, RiskProfile(1.0))
    return art, objective(art)


# -- dual coefficient terms ---------------------------------------------------

def test_psi_single_entry_example():
    model = EnergySystemModel((PowerNode("A", 40.0, -70.0),),
                              (PlantType("th", frozenset({THERMAL}), nameplate=10.0),), mode=POWER_ONLY)
    sc = SingleScenarioData(np.array([[7.0]]), np.zeros((0, 1)), np.zeros((0, 1, 1)))
    sset = ScenarioSet(("A",), (), (), TimeStructure.uniform(1, 1), (sc,))
    zeros = {"gas": np.zeros((0, 1)), "cf": np.zeros((0, 1, 1))}
    moment = MomentAmbiguity({"power": np.array([[7.0]]), **zeros}, {"power": np.array([[-1.0]]), **zeros},
                             {"power": np.array([[2.0]]), **zeros}, 1.0)
    obj, cntr = psi_terms(model, sset, moment)
    assert cntr.tolist() == [[7.0, -7.0]]
    assert obj.tolist() == [9.0, -6.0]


def test_psi_zero_data_gives_zero_rows(model, three):
    zero = [SingleScenarioData(*(np.zeros_like(a) for a in sc.families().values())) for sc in three.scenarios]
    sset = three.with_scenarios(zero, three.probabilities)
    _, cntr = psi_terms(model, sset, moment_ambiguity(sset, model))
    assert not cntr.any()


def test_psi_rows_match_direct_formula(model, three):
    moment = moment_ambiguity(three, model)
    obj, cntr = psi_terms(model, three, moment)
    rng = np.random.default_rng(0)
    y = rng.uniform(0, 1, cntr.shape[1])
    half = cntr.shape[1] // 2
    for s, sc in enumerate(three.scenarios):
        vals = np.concatenate([sc.power_demand.ravel(), sc.capacity_factor.ravel(), sc.gas_demand.ravel()])
        assert cntr[s] @ y == pytest.approx(float(vals @ (y[:half] - y[half:])), rel=1e-12)
    mu = np.concatenate([moment.means[f].ravel() for f in ("power", "cf", "gas")])
    up = np.concatenate([moment.upper[f].ravel() for f in ("power", "cf", "gas")])
    lo = np.concatenate([moment.lower[f].ravel() for f in ("power", "cf", "gas")])
    assert obj @ y == pytest.approx(float((mu + up) @ y[:half] - (mu + lo) @ y[half:]), rel=1e-12)


# -- stochastic program -------------------------------------------------------

def test_single_scenario_sp_equals_deterministic(model, three):
    one = three.single(1)
    sp = objective(build_sp_ef(model, one, RiskProfile(1.0))).objective
    det = solve(build_deterministic(model, one.time, one.scenarios[0]).instance, OPTS).objective
    assert sp == pytest.approx(det, rel=1e-7)
    assert objective(build_deterministic_ef(model, one)).objective == pytest.approx(det, rel=1e-7)


def test_cvar_at_alpha_zero_is_expectation(model, three, sp_three):
    risk_neutral = sp_three[1].objective
    cvar0 = objective(build_sp_ef(model, three, RiskProfile(0.0, 0.0))).objective
    assert cvar0 == pytest.approx(risk_neutral, rel=1e-7)


def test_tail_term_at_fixed_first_stage(model, two):
    art = build_sp_ef(model, two, RiskProfile(1.0))
    res = objective(art)
    fs = art.first_stage_values(res.values)
    theta = evaluate_scenarios(model, two, fs)
    tail = build_sp_ef(model, two, RiskProfile(0.0, 0.5))
    fixed = solve(fix_variables(tail.instance, fs), OPTS)
    parts = tail.decomposition(fixed.values)
    assert parts["cvar"] == pytest.approx(max(theta), rel=1e-7)


def test_decomposition_sums_to_objective(model, three, sp_three):
    art, res = sp_three
    assert sum(art.decomposition(res.values).values()) == pytest.approx(res.objective, rel=1e-9)
    for lam in (0.5,):
        a = build_method(MDRO, model, three, RiskProfile(lam, 0.7))
        r = objective(a)
        assert sum(a.decomposition(r.values).values()) == pytest.approx(r.objective, rel=1e-9)


# -- moment DRO ---------------------------------------------------------------

def test_mdro_dominates_sp(model, three, sp_three):
    mdro = objective(build_method(MDRO, model, three, RiskProfile(1.0))).objective
    assert mdro >= sp_three[1].objective * (1 - 1e-6)


def test_zero_duals_match_worst_case_via_tail(model, two):
    robust = objective(build_mdro_ef(model, two, moment_ambiguity(two, model), RiskProfile(1.0),
                                     zero_duals=True)).objective
    # with two equiprobable scenarios the 50% tail is the worse scenario
    worst = objective(build_sp_ef(model, two, RiskProfile(0.0, 0.5))).objective
    assert robust == pytest.approx(worst, rel=1e-7)


def test_wide_box_collapses_to_robust(model, two):
    base = moment_ambiguity(two, model)
    wide = MomentAmbiguity(base.means, {f: np.full_like(v, -1e7) for f, v in base.lower.items()},
                           {f: np.full_like(v, 1e7) for f, v in base.upper.items()}, base.kappa)
    robust = objective(build_mdro_ef(model, two, base, RiskProfile(1.0), zero_duals=True)).objective
    assert objective(build_mdro_ef(model, two, wide, RiskProfile(1.0))).objective == pytest.approx(robust, rel=1e-7)


def test_separate_duals_never_cost_more(model, three):
    risk = RiskProfile(0.5, 0.7)
    moment = moment_ambiguity(three, model)
    shared = objective(build_mdro_ef(model, three, moment, risk)).objective
    separate = objective(build_mdro_ef(model, three, moment, risk, separate_duals=True)).objective
    assert separate <= shared * (1 + 1e-7)


def test_mdro_rejects_mismatched_moments(model, three, two):
    with pytest.raises(ReformulationError):
        build_mdro_ef(model, three, moment_ambiguity(fixture_scenarios(0, 2, n_rep_days=1, hours_per_day=4),
                                                     model))


# -- Wasserstein DRO ---------------------------------------------------------

def test_wdro_zero_radius_equals_sp(model, three, sp_three):
    wdro = objective(build_method(WDRO, model, three, RiskProfile(1.0), radius=0.0)).objective
    assert wdro == pytest.approx(sp_three[1].objective, rel=1e-6)


def test_wdro_monotone_in_radius(model):
    sset = fixture_scenarios(2, 4, **DIMS)
    full = wasserstein_ambiguity(sset, range(4), range(4))
    objs = []
    for r in (0.0, 0.5 * full.radius, full.radius):
        wass = wasserstein_ambiguity(sset, range(4), range(4), radius=r)
        objs.append(objective(build_wdro_ef(model, sset, wass, RiskProfile(1.0))).objective)
    assert objs[0] <= objs[1] * (1 + 1e-7) and objs[1] <= objs[2] * (1 + 1e-7)


def test_wdro_rejects_empty_ball(model):
    sset = fixture_scenarios(2, 4, **DIMS)
    wass = wasserstein_ambiguity(sset, k_nominal=2, seed=0, radius=0.0)
    with pytest.raises(ReformulationError):
        build_wdro_ef(model, sset, wass)
    ok = wasserstein_ambiguity(sset, k_nominal=2, seed=0)
    assert objective(build_wdro_ef(model, sset, ok, RiskProfile(1.0))).objective > 0


def test_wdro_rejects_foreign_support(model, three):
    wass = wasserstein_ambiguity(fixture_scenarios(3, 5, **DIMS), [3, 4], [0])
    with pytest.raises(ReformulationError):
        build_wdro_ef(model, three, wass)


# -- shared structure ---------------------------------------------------------

def test_methods_share_first_stage_registry(model, three):
    names = {m: build_method(m, model, three).first_stage.names for m in (SP, MDRO, WDRO)}
    assert names[SP] == names[MDRO] == names[WDRO]


@pytest.mark.parametrize("method", [SP, MDRO, WDRO])
def test_lp_round_trip(model, three, method):
    art = build_method(method, model, three, RiskProfile(0.5, 0.7), k_nominal=1 if method == WDRO else None)
    text = dumps_lp(art.instance)
    back = loads_lp(text)
    assert back.equals(art.instance)
    assert dumps_lp(back) == text


def test_unknown_method_and_bad_risk(model, three):
    with pytest.raises(ReformulationError):
        build_method("cvar", model, three)
    with pytest.raises(ReformulationError):
        RiskProfile(1.5)
    with pytest.raises(ReformulationError):
        RiskProfile(0.5, 1.0)
