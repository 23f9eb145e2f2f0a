import json

import numpy as np
import pytest

from gridplan.builder import ROW_FAMILIES, audit_rows, build_deterministic, build_first_stage, shedding_solution
from gridplan.fixtures import fixture_model, fixture_scenarios
from gridplan.milp import MilpInstance, SolveOptions, fix_variables, solve, solve_lp_relaxation
from gridplan.network import (POWER_ONLY, THERMAL, VRE, EnergySystemModel, NetworkError, PlantType, PowerNode,
                              SystemParameters, TransmissionLine, load_model, model_from_dict, model_to_dict,
                              save_model)
from gridplan.scenario import SingleScenarioData, TimeStructure

GAS_FAMILIES = {"gas_balance", "injection_min", "injection_max", "pipe_flow", "pipe_status", "liquefaction",
                "vaporization", "svl_level", "vaporization_cap", "svl_level_cap", "gas_to_power", "emissions_gas"}


def tiny_model(nodes=("A",), lines=(), initial=None, **params):
    power = tuple(PowerNode(n, 40.0 + i, -70.0) for i, n in enumerate(nodes))
    plants = (
        PlantType("th", frozenset({THERMAL}), nameplate=50.0, fuel_price=2.0, heat_rate=1.0, capex=1e6,
                  initial_count=tuple((initial or {}).items())),
        PlantType("pv", frozenset({VRE}), nameplate=1.0, capex=1e6),
    )
    return EnergySystemModel(power, plants, transmission_lines=lines,
                             params=SystemParameters(**params), mode=POWER_ONLY)


def flat_data(demand, n_nodes=1, T=4):
    d = np.asarray(demand, dtype=float).reshape(n_nodes, -1) * np.ones((n_nodes, T))
    return SingleScenarioData(d, np.zeros((0, 1)), np.full((1, n_nodes, T), 0.5))


@pytest.fixture(scope="module")
def small_fixture():
    return fixture_scenarios(0, 2, n_rep_days=2, hours_per_day=6)


def first_stage_count_oracle(doc):
    n_nodes = len(doc["power_nodes"])
    plants = 3 * n_nodes * len(doc["plant_types"])
    storage = 2 * sum(len(n["storage_types"]) for n in doc["power_nodes"])
    lines = sum(1 for ln in doc["transmission_lines"] if not ln["exists"])
    if doc["mode"] == "power_only":
        return plants + storage + lines
    return plants + storage + lines + 3 * len(doc["pipelines"]) + 2 * len(doc["svl_nodes"])


def operations_count_oracle(doc, T, R, n_calendar):
    n_nodes = len(doc["power_nodes"])
    count = 1 + n_nodes * len(doc["plant_types"]) * T + n_nodes * T
    count += 3 * T * sum(len(n["storage_types"]) for n in doc["power_nodes"])
    count += T * len(doc["transmission_lines"])
    if doc["mode"] == "power_only":
        return count
    count += 1 + R * len(doc["pipelines"])
    for g in doc["gas_nodes"]:
        count += R * (len(g["adjacent_power_nodes"]) + 2 * len(g["adjacent_svl_nodes"]) + 3)
    count += len(doc["svl_nodes"]) * (2 * R + n_calendar)
    return count


# -- first stage -------------------------------------------------------------

def test_tiny_first_stage_kinds():
    inst = MilpInstance()
    fs = build_first_stage(tiny_model(), inst)
    assert len(fs.names) == 6
    for name in ("n_operating(A,th)", "n_built(A,th)", "n_retired(A,th)"):
        assert inst.is_integer(inst.var(name))
    for name in ("n_operating(A,pv)", "n_built(A,pv)", "n_retired(A,pv)"):
        assert not inst.is_integer(inst.var(name))


@pytest.mark.parametrize("mode", ["joint", "power_only"])
def test_fixture_variable_counts(mode, small_fixture):
    model = fixture_model(mode=mode)
    doc = model_to_dict(model)
    t = small_fixture.time
    build = build_deterministic(model, t, small_fixture.scenarios[0])
    assert len(build.first_stage.names) == first_stage_count_oracle(doc)
    n_ops = build.operations.var_range[1] - build.operations.var_range[0]
    assert n_ops == operations_count_oracle(doc, t.n_hours, t.n_rep_days, t.n_calendar_days)


def test_power_only_has_no_gas_side(small_fixture):
    build = build_deterministic(fixture_model(mode="power_only"), small_fixture.time, small_fixture.scenarios[0])
    counts = audit_rows(build.instance)
    assert not GAS_FAMILIES & set(counts)
    assert not any(n.startswith(("build_pipe", "pipe_active", "svl_")) for n in build.instance.var_names)
    row = build.instance.row_index("emissions_cap(s0)")
    p = fixture_model().params
    assert build.instance.rhs[row] == pytest.approx(p.emissions_baseline_power)


def test_audit_covers_every_operational_family(small_fixture):
    build = build_deterministic(fixture_model(), small_fixture.time, small_fixture.scenarios[0])
    counts = audit_rows(build.instance)
    expected = set(ROW_FAMILIES) - {"op_cost", "risk_excess", "dro_cut", "system_balance"}
    assert expected <= set(counts)
    assert sum(counts.values()) == build.instance.num_rows


# -- operations --------------------------------------------------------------

def _solve_fixed(model, data, fixes, T=4):
    build = build_deterministic(model, TimeStructure.uniform(1, T), data)
    inst = fix_variables(build.instance, fixes)
    res = solve(inst, SolveOptions(mip_gap=1e-9))
    assert res.status == "optimal"
    return build, res


def test_single_thermal_covers_demand():
    model = tiny_model()
    zero_pv = {"n_operating(A,pv)": 0.0}
    build, res = _solve_fixed(model, flat_data(10.0), {"n_operating(A,th)": 1.0, **zero_pv})
    assert sum(res.value(f"shed(s0,A,{t})") for t in range(4)) == pytest.approx(0.0, abs=1e-9)
    build, res = _solve_fixed(model, flat_data(10.0), {"n_operating(A,th)": 0.0, **zero_pv})
    assert [res.value(f"shed(s0,A,{t})") for t in range(4)] == pytest.approx([10.0] * 4)


def test_line_limit_forces_shedding():
    line = TransmissionLine("L", "A", "B", True, existing_capacity=5.0)
    model = tiny_model(("A", "B"), (line,))
    data = flat_data([[0.0], [8.0]], n_nodes=2)
    fixes = {"n_operating(A,th)": 1.0, "n_operating(B,th)": 0.0, "n_operating(A,pv)": 0.0,
             "n_operating(B,pv)": 0.0}
    _, res = _solve_fixed(model, data, fixes)
    assert [res.value(f"shed(s0,B,{t})") for t in range(4)] == pytest.approx([3.0] * 4)


def test_empty_system_costs_nothing():
    model = tiny_model()
    build = build_deterministic(model, TimeStructure.uniform(1, 4), flat_data(0.0))
    res = solve(build.instance)
    assert res.objective == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(res.values, 0.0, atol=1e-9)


def test_complete_recourse_by_construction(small_fixture):
    model = fixture_model()
    rng = np.random.default_rng(4)
    for s, data in enumerate(small_fixture.scenarios):
        build = build_deterministic(model, small_fixture.time, data)
        inst, fs, ops = build.instance, build.first_stage, build.operations
        x_fs = np.array([rng.integers(0, 4) if inst.is_integer(j) else rng.uniform(0, 50) for j in fs.indices],
                        dtype=float)
        for j in fs.pipe_active.values():
            x_fs[fs.indices.index(j)] = rng.integers(0, 2)
        x = shedding_solution(model, small_fixture.time, data, fs, ops, inst, x_fs)
        viol = inst.residuals(x)[ops.row_range[0]:ops.row_range[1]]
        assert viol.max() <= 1e-9


def _emissions(build, res):
    return res.value("emissions_power(s0)") + res.value("emissions_gas(s0)")


def test_emissions_cap_binds_only_when_tight(small_fixture):
    data = small_fixture.scenarios[0]
    objs = []
    for goal in (0.0, 0.5, 0.95):
        model = fixture_model(reduction_goal=goal)
        build = build_deterministic(model, small_fixture.time, data)
        res = solve_lp_relaxation(build.instance)
        assert res.status == "optimal"
        p = model.params
        cap = (1 - goal) * (p.emissions_baseline_power + p.emissions_baseline_gas)
        e = _emissions(build, res)
        assert e <= cap * (1 + 1e-9)
        if goal == 0.0:
            assert e < cap * 0.99
        if goal == 0.95:
            assert e == pytest.approx(cap, rel=1e-7)
            lcf = build.operations.cost_value(res.values)["lcf"]
            assert lcf > 0
        objs.append(res.objective)
    assert objs[0] <= objs[1] * (1 + 1e-9) and objs[1] <= objs[2] * (1 + 1e-9)


def test_storage_recursion_telescopes(small_fixture):
    model = fixture_model()
    time = small_fixture.time
    build = build_deterministic(model, time, small_fixture.scenarios[1])
    res = solve_lp_relaxation(build.instance)
    st = model.storage("li_ion")
    for key, ops in build.operations.storage.items():
        for d in range(time.n_rep_days):
            hours = list(time.hours_of_day(d))
            net = sum(st.charge_efficiency * res.values[ops["charge"][t]]
                      - res.values[ops["discharge"][t]] / st.discharge_efficiency for t in hours)
            assert res.values[ops["level"][hours[-1]]] == pytest.approx(net, abs=1e-6)


# -- network documents -------------------------------------------------------

def test_network_json_round_trip(tmp_path):
    model = fixture_model()
    save_model(model, tmp_path / "net.json")
    assert load_model(tmp_path / "net.json") == model


def test_network_errors_report_json_path():
    doc = model_to_dict(fixture_model())
    doc["plant_types"][1]["nameplate"] = "big"
    with pytest.raises(NetworkError) as err:
        model_from_dict(doc)
    assert "$.plant_types[1].nameplate" in str(err.value)


def test_network_rejects_dangling_reference():
    doc = model_to_dict(fixture_model())
    doc["transmission_lines"][0]["to_node"] = "NOWHERE"
    with pytest.raises(NetworkError):
        model_from_dict(json.loads(json.dumps(doc)))


def test_joint_mode_needs_gas_network():
    with pytest.raises(NetworkError):
        build_first_stage(EnergySystemModel(tiny_model().power_nodes, tiny_model().plant_types), MilpInstance())
