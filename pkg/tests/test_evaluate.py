import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplan.builder import build_deterministic
from gridplan.evaluate import (EvaluationError, cvar, evaluate_scenarios, evaluate_second_stage, evpi,
                               first_stage_cost, kappa_sweep, lce, oos_protocol, out_of_sample, partition,
                               risk_sweep, risk_value, vss)
from gridplan.fixtures import fixture_model, fixture_scenarios
from gridplan.milp import SolveOptions, fix_variables, solve, solve_lp_relaxation
from gridplan.reformulate import SP, RiskProfile, build_method, build_sp_ef
from gridplan.scenario import ScenarioSet, SingleScenarioData, TimeStructure
from gridplan.solution import plan_from_result
from oracles import cvar_by_sorting, midpoint_realization, random_first_stage

OPTS = SolveOptions(mip_gap=1e-9)
DIMS = dict(n_rep_days=2, hours_per_day=4)


@pytest.fixture(scope="module")
def model():
    return fixture_model()


@pytest.fixture(scope="module")
def sset():
    return fixture_scenarios(7, 3, **DIMS)


@pytest.fixture(scope="module")
def sp_plan(model, sset):
    art = build_sp_ef(model, sset, RiskProfile(1.0))
    return art, plan_from_result(art, solve(art.instance, OPTS))


# -- risk measures ------------------------------------------------------------

def test_cvar_hand_cases():
    v, p = [1, 2, 3, 4], [0.25] * 4
    assert cvar(v, p, 0.0) == 2.5
    assert cvar(v, p, 0.5) == 3.5
    assert cvar(v, p, 0.75) == 4.0


def test_cvar_rejects_bad_input():
    with pytest.raises(ValueError):
        cvar([1, 2], [0.5, 0.6], 0.5)
    with pytest.raises(ValueError):
        cvar([1, 2], [0.5, 0.5], 1.0)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=8), st.floats(0, 0.99),
       st.floats(0, 0.99), st.integers(0, 2**32 - 1))
def test_cvar_properties(values, a1, a2, seed):
    p = np.random.default_rng(seed).dirichlet(np.ones(len(values)))
    v = np.array(values)
    assert cvar(v, p, 0.0) == float(np.dot(p, v))
    lo, hi = sorted((a1, a2))
    assert cvar(v, p, lo) <= cvar(v, p, hi) + 1e-9 * (1 + np.abs(v).max())
    assert cvar(v, p, hi) == pytest.approx(cvar_by_sorting(v, p, hi), rel=1e-9, abs=1e-6)


def test_risk_value_mix():
    v, p = [1, 2, 3, 4], [0.25] * 4
    assert risk_value(v, p, RiskProfile(1.0, 0.5)) == 2.5
    assert risk_value(v, p, RiskProfile(0.5, 0.5)) == pytest.approx(3.0)


# -- second stage -------------------------------------------------------------

def test_recourse_consistent_with_ef(model, sset, sp_plan):
    art, plan = sp_plan
    ops = evaluate_scenarios(model, sset, plan.first_stage)
    assert float(np.dot(sset.probabilities, ops)) == pytest.approx(plan.decomposition["expectation"], rel=1e-6)
    assert first_stage_cost(model, plan.first_stage) == pytest.approx(plan.first_stage_cost, rel=1e-9)


def test_recourse_with_no_fleet_sheds_everything():
    model = fixture_model(mode="power_only")
    sset = fixture_scenarios(0, 1, **DIMS)
    fs = random_first_stage(model, np.random.default_rng(0))
    for key in list(fs):
        if key.startswith("n_operating"):
            node, pid = key[len("n_operating("):-1].split(",")
            init = model.plant(pid).initial(node)
            fs[key], fs[f"n_built({node},{pid})"], fs[f"n_retired({node},{pid})"] = 0.0, 0.0, init
        elif key.startswith("storage_"):
            fs[key] = 0.0
    data = sset.scenarios[0]
    got = evaluate_second_stage(model, sset.time, fs, data)
    expect = 10_000.0 * float(np.sum(data.power_demand * sset.time.hour_weights()))
    assert got == pytest.approx(expect, rel=1e-9)


def test_recourse_zero_demand_costs_nothing(model, sset):
    sc = sset.scenarios[0]
    zero = SingleScenarioData(np.zeros_like(sc.power_demand), np.zeros_like(sc.gas_demand), sc.capacity_factor)
    fs = random_first_stage(model, np.random.default_rng(1))
    assert evaluate_second_stage(model, sset.time, fs, zero) == pytest.approx(0.0, abs=1e-6)


def test_recourse_rejects_fractional_integers(model, sset):
    fs = random_first_stage(model, np.random.default_rng(2))
    fs["n_operating(BOS,ng)"] += 0.5
    with pytest.raises(EvaluationError):
        evaluate_second_stage(model, sset.time, fs, sset.scenarios[0])


def test_value_function_convex_in_realization(model, sset):
    rng = np.random.default_rng(3)
    for _ in range(5):
        fs = random_first_stage(model, rng)
        i, j = rng.choice(len(sset), 2, replace=False)
        a, b = sset.scenarios[i], sset.scenarios[j]
        mid = evaluate_second_stage(model, sset.time, fs, midpoint_realization(a, b))
        ends = 0.5 * (evaluate_second_stage(model, sset.time, fs, a) + evaluate_second_stage(model, sset.time, fs, b))
        assert mid <= ends + 1e-7 * max(1.0, abs(ends))


# -- VSS and EVPI -------------------------------------------------------------

def test_vss_and_evpi_nonnegative(model, sset, sp_plan):
    _, plan = sp_plan
    v = vss(model, sset, solver=OPTS, sp_plan=plan)
    e = evpi(model, sset, solver=OPTS, sp_plan=plan)
    assert v.absolute >= -1e-6 * plan.objective
    assert e.absolute >= -1e-6 * plan.objective
    assert v.normalized == pytest.approx(v.absolute / plan.objective)


def test_vss_two_step_oracle(model, sset, sp_plan):
    _, plan = sp_plan
    mean = SingleScenarioData(*(sum(p * getattr(sc, f) for p, sc in zip(sset.probabilities, sset.scenarios))
                                for f in ("power_demand", "gas_demand", "capacity_factor")))
    det = build_deterministic(model, sset.time, mean)
    xbar = solve(det.instance, OPTS).values
    fs = {n: float(xbar[j]) for n, j in zip(det.first_stage.names, det.first_stage.indices)}
    total = 0.0
    for p, sc in zip(sset.probabilities, sset.scenarios):
        b = build_deterministic(model, sset.time, sc)
        total += p * solve_lp_relaxation(fix_variables(b.instance, fs)).objective
    assert vss(model, sset, solver=OPTS, sp_plan=plan).z_other == pytest.approx(total, rel=1e-6)


def test_evpi_aggregates_wait_and_see(model, sset, sp_plan):
    _, plan = sp_plan
    ws = [solve(build_deterministic(model, sset.time, sc).instance, OPTS).objective for sc in sset.scenarios]
    e = evpi(model, sset, solver=OPTS, sp_plan=plan)
    assert e.z_other == pytest.approx(float(np.dot(sset.probabilities, ws)), rel=1e-7)


def test_single_scenario_values_are_zero(model, sset):
    one = sset.single(0)
    assert vss(model, one, solver=OPTS).absolute == 0.0
    assert evpi(model, one, solver=OPTS).absolute == 0.0


# -- out of sample ------------------------------------------------------------

def test_replay_identity(model, sset, sp_plan):
    _, plan = sp_plan
    dist = out_of_sample(model, plan.first_stage, sset, reference=plan.objective)
    assert dist.mean == pytest.approx(plan.objective, rel=1e-6)
    one = out_of_sample(model, plan.first_stage, sset.single(1))
    assert one.totals[0] == pytest.approx(plan.first_stage_cost + plan.scenario_costs[1], rel=1e-6)


def test_partition_deterministic():
    a = partition(10, 5, seed=7, index=3)
    assert a == partition(10, 5, seed=7, index=3)
    assert sorted(a[0] + a[1]) == list(range(10)) and len(a[0]) == 5
    assert a != partition(10, 5, seed=7, index=4)


def test_oos_protocol_reproducible(model):
    sset = fixture_scenarios(0, 4, n_rep_days=1, hours_per_day=4)
    kw = dict(n_partitions=2, seed=3, solver=OPTS)
    first = oos_protocol(model, sset, SP, **kw)
    again = oos_protocol(model, sset, SP, jobs=2, **kw)
    assert [p.to_dict() for p in first] == [p.to_dict() for p in again]
    for p in first:
        assert len(p.in_sample) == 2 and len(p.out_totals) == 2
        assert p.max_increase == pytest.approx(max((t - p.in_sample_cost) / p.in_sample_cost for t in p.out_totals))


def test_oos_rejects_empty_side(model, sset):
    with pytest.raises(EvaluationError):
        oos_protocol(model, sset, SP, in_fraction=0.1)


# -- levelized cost and sweeps -------------------------------------------------

def test_lce_cases():
    sc = SingleScenarioData(np.array([[10.0]]), np.zeros((0, 1)), np.zeros((0, 1, 1)))
    sset = ScenarioSet(("A",), (), (), TimeStructure.uniform(1, 1), (sc,))
    assert lce(100.0, sset) == 10.0
    double = sset.with_scenarios([SingleScenarioData(2 * sc.power_demand, sc.gas_demand, sc.capacity_factor)],
                                 np.ones(1))
    assert lce(200.0, double) == 10.0


def test_lce_recomputed(sset):
    w, wd = sset.time.hour_weights(), sset.time.day_weights()
    demand = np.mean([np.sum(sc.power_demand * w) + np.sum(sc.gas_demand * wd) / 3.412 for sc in sset.scenarios])
    assert lce(1e9, sset) == pytest.approx(1e9 / demand, rel=1e-12)


def test_risk_sweep_rows(model, sset):
    rows = risk_sweep(model, sset, SP, [(1.0, 0.7), (0.5, 0.7), (0.0, 0.7)], OPTS)
    assert [r["lam"] for r in rows] == [1.0, 0.5, 0.0]
    assert all(v == 0.0 for k, v in rows[0].items() if k.startswith("pct_"))
    costs = [r["total_cost"] for r in rows]
    assert costs[0] <= costs[1] * (1 + 1e-6) and costs[1] <= costs[2] * (1 + 1e-6)
    assert {"storage_cap", "thermal_cap", "vre_cap", "thermal_gen", "solar_gen", "wind_gen"} <= set(rows[0])


def test_kappa_sweep_baseline(model, sset):
    rows = kappa_sweep(model, sset, [1.0], RiskProfile(1.0), OPTS)
    assert rows == [{"kappa": 1.0, "objective": rows[0]["objective"], "pct_change": 0.0}]


def test_plan_outcomes_capacities(model, sset, sp_plan):
    art, plan = sp_plan
    rows = risk_sweep(model, sset, SP, [(1.0, 0.7)], OPTS)
    cap = sum(p.nameplate * plan.first_stage[f"n_operating({n.id},{p.id})"]
              for n in model.power_nodes for p in model.plant_types if p.is_thermal)
    assert rows[0]["thermal_cap"] == pytest.approx(cap)
    assert build_method(SP, model, sset).first_stage.names == art.first_stage.names
