"""Variables, costs, and constraints of the joint expansion-planning model.

:func:`build_first_stage` registers the investment decisions once per
instance; :func:`build_operations_block` adds one scenario's operational
variables and rows and returns its cost expression without touching the
objective, so the same block serves the deterministic model and every
extensive form.

Row families are named ``family(index...)``; :data:`ROW_FAMILIES` maps each
family to the part of the model it implements and :func:`audit_rows`
counts rows per family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .milp import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MilpInstance, make_name
from .network import EnergySystemModel, validate_model
from .scenario import SingleScenarioData, TimeStructure

FREE = (-math.inf, math.inf)

# family -> description; every emitted row belongs to exactly one family
ROW_FAMILIES = {
    "fleet_balance": "operating plants = initial - retired + built",
    "resource_cap": "system-wide capacity cap for a plant group",
    "pipe_status": "pipeline operating = existing + built - retired",
    "gen_min": "thermal output above minimum stable level",
    "gen_max": "thermal output below installed capacity",
    "ramp_up": "thermal ramp-up limit within a representative day",
    "ramp_down": "thermal ramp-down limit within a representative day",
    "vre_avail": "renewable output below capacity factor times capacity",
    "shed_cap": "power shedding at most demand",
    "power_balance": "nodal power balance",
    "line_existing": "flow limit on existing lines (two sides)",
    "line_candidate": "flow limit on candidate lines gated by the build decision",
    "storage_level": "battery level recursion",
    "storage_start": "battery level at the first hour of a representative day",
    "storage_charge_cap": "charging below power rating",
    "storage_discharge_cap": "discharging below power rating",
    "storage_level_cap": "level below energy rating",
    "gas_balance": "nodal gas balance",
    "injection_min": "minimum supply injection",
    "injection_max": "maximum supply injection",
    "pipe_flow": "pipeline flow gated by operating status",
    "liquefaction": "liquefaction intake aggregation",
    "vaporization": "vaporization output aggregation",
    "svl_level": "liquefied-gas storage recursion over calendar days",
    "vaporization_cap": "vaporization below installed capacity",
    "svl_level_cap": "liquefied-gas storage below installed capacity",
    "gas_to_power": "gas delivered to a power node equals its plants' fuel use",
    "emissions_power": "power-sector emissions definition",
    "emissions_gas": "non-power gas emissions definition",
    "emissions_cap": "emissions cap",
    "op_cost": "scenario operational cost definition",
    "risk_excess": "cost above the value-at-risk level",
    "dro_cut": "robust certificate rows",
    "system_balance": "aggregated power balance (copper plate)",
}

FIRST_STAGE_COST_KEYS = ("plant_capex", "plant_fom", "plant_decommission", "storage",
                         "transmission", "pipeline", "svl")
OPERATING_COST_KEYS = ("fuel", "vom", "gas_import", "lcf", "shed_power", "shed_gas")


class BuildError(ValueError):
    pass


class Expr:
    """Sparse linear expression ``sum coef * x[idx] + const``."""

    __slots__ = ("terms", "const")

    def __init__(self):
        self.terms: dict[int, float] = {}
        self.const = 0.0

    def add(self, idx: int, coef: float) -> None:
        if coef:
            self.terms[idx] = self.terms.get(idx, 0.0) + coef

    def value(self, x: np.ndarray) -> float:
        return float(sum(c * x[j] for j, c in self.terms.items())) + self.const

    def items(self):
        return self.terms.items()


@dataclass
class FirstStageBlock:
    names: list[str]
    indices: list[int]
    costs: dict[str, Expr]
    operating: dict[tuple[str, str], int]  # (node, plant) -> count variable
    built: dict[tuple[str, str], int]
    retired: dict[tuple[str, str], int]
    line_build: dict[str, int]
    pipe_build: dict[str, int]
    pipe_retire: dict[str, int]
    pipe_active: dict[str, int]
    storage_power: dict[tuple[str, str], int]
    storage_energy: dict[tuple[str, str], int]
    svl_storage: dict[str, int]
    svl_vapor: dict[str, int]
    thermal_operating: list[str] = field(default_factory=list)
    vre_operating: list[str] = field(default_factory=list)

    def cost_value(self, x: np.ndarray) -> dict[str, float]:
        return {k: e.value(x) for k, e in self.costs.items()}


@dataclass
class OperationsBlock:
    tag: str
    costs: dict[str, Expr]
    cost: Expr
    emissions_power: int
    emissions_gas: int | None
    shed: dict[tuple[str, int], int]
    gen: dict[tuple[str, str, int], int]
    gas_shed: dict[tuple[str, int], int] = field(default_factory=dict)
    lcf: dict[tuple[str, int], int] = field(default_factory=dict)
    storage: dict[str, dict] = field(default_factory=dict)
    var_range: tuple[int, int] = (0, 0)
    row_range: tuple[int, int] = (0, 0)

    def cost_value(self, x: np.ndarray) -> dict[str, float]:
        return {k: e.value(x) for k, e in self.costs.items()}


def build_first_stage(model: EnergySystemModel, inst: MilpInstance) -> FirstStageBlock:
    """Register investment decisions, their linking rows, and their costs (added to the objective)."""
    validate_model(model)
    start = inst.num_vars
    costs = {k: Expr() for k in FIRST_STAGE_COST_KEYS}
    op, est, dec = {}, {}, {}
    thermal_names, vre_names = [], []
    for n in model.power_nodes:
        for p in model.plant_types:
            kind = INTEGER if p.is_thermal else CONTINUOUS
            init = p.initial(n.id)
            key = (n.id, p.id)
            op[key] = inst.add_var(make_name("n_operating", n.id, p.id), 0, math.inf, kind)
            est[key] = inst.add_var(make_name("n_built", n.id, p.id), 0, math.inf, kind)
            dec[key] = inst.add_var(make_name("n_retired", n.id, p.id), 0, init, kind)
            (thermal_names if p.is_thermal else vre_names).append(inst.var_names[op[key]])
            costs["plant_capex"].add(est[key], p.capex)
            costs["plant_fom"].add(op[key], p.fom)
            costs["plant_decommission"].add(dec[key], p.decommission_cost)
            inst.add_row(make_name("fleet_balance", n.id, p.id),
                         [(op[key], 1.0), (dec[key], 1.0), (est[key], -1.0)], EQ, init)

    store_p, store_e = {}, {}
    for n in model.power_nodes:
        for r in n.storage_types:
            st = model.storage(r)
            store_p[(n.id, r)] = inst.add_var(make_name("storage_power", n.id, r))
            store_e[(n.id, r)] = inst.add_var(make_name("storage_energy", n.id, r))
            costs["storage"].add(store_p[(n.id, r)], st.power_capex + st.power_fom)
            costs["storage"].add(store_e[(n.id, r)], st.energy_capex + st.energy_fom)

    line_build = {}
    for ln in model.transmission_lines:
        if ln.exists:
            costs["transmission"].const += ln.fom
        else:
            line_build[ln.id] = inst.add_var(make_name("build_line", ln.id), kind=BINARY)
            costs["transmission"].add(line_build[ln.id], ln.capex + ln.fom)

    pipe_build, pipe_retire, pipe_active = {}, {}, {}
    svl_s, svl_v = {}, {}
    if model.joint:
        for pl in model.pipelines:
            # existing pipelines can only be retired, candidates only built
            pipe_build[pl.id] = inst.add_var(make_name("build_pipe", pl.id), 0, 0 if pl.exists else 1, BINARY)
            pipe_retire[pl.id] = inst.add_var(make_name("retire_pipe", pl.id), 0, 1 if pl.exists else 0, BINARY)
            pipe_active[pl.id] = inst.add_var(make_name("pipe_active", pl.id), kind=BINARY)
            costs["pipeline"].add(pipe_build[pl.id], pl.capex)
            costs["pipeline"].add(pipe_retire[pl.id], pl.decommission_cost)
            costs["pipeline"].add(pipe_active[pl.id], pl.fom)
            inst.add_row(make_name("pipe_status", pl.id),
                         [(pipe_active[pl.id], 1.0), (pipe_build[pl.id], -1.0),
                          (pipe_retire[pl.id], 1.0)], EQ, 1.0 if pl.exists else 0.0)
        for sv in model.svl_nodes:
            svl_s[sv.id] = inst.add_var(make_name("svl_storage_add", sv.id))
            svl_v[sv.id] = inst.add_var(make_name("svl_vapor_add", sv.id))
            costs["svl"].add(svl_s[sv.id], sv.storage_capex + sv.storage_fom)
            costs["svl"].add(svl_v[sv.id], sv.vaporization_capex + sv.vaporization_fom)
            costs["svl"].const += sv.storage_fom * sv.storage_capacity
            costs["svl"].const += sv.vaporization_fom * sv.vaporization_capacity

    for lim in model.resource_limits:
        coefs = [(op[(n.id, pid)], model.plant(pid).nameplate)
                 for n in model.power_nodes for pid in lim.plant_types]
        inst.add_row(make_name("resource_cap", lim.id), coefs, LE, lim.cap)

    for e in costs.values():
        for j, c in e.items():
            inst.add_objective(j, c)
        inst.obj_constant += e.const

    idx = list(range(start, inst.num_vars))
    return FirstStageBlock([inst.var_names[j] for j in idx], idx, costs, op, est, dec, line_build,
                           pipe_build, pipe_retire, pipe_active, store_p, store_e, svl_s, svl_v,
                           thermal_names, vre_names)


def _check_realization(model: EnergySystemModel, time: TimeStructure, data: SingleScenarioData) -> None:
    n_e, n_t = len(model.power_nodes), time.n_hours
    if data.power_demand.shape != (n_e, n_t):
        raise BuildError(f"power demand has shape {data.power_demand.shape}, expected {(n_e, n_t)}")
    n_v = len(model.vre_types)
    if data.capacity_factor.shape != (n_v, n_e, n_t):
        raise BuildError(f"capacity factors have shape {data.capacity_factor.shape}, "
                         f"expected {(n_v, n_e, n_t)}")
    if model.joint and data.gas_demand.shape != (len(model.gas_nodes), time.n_rep_days):
        raise BuildError(f"gas demand has shape {data.gas_demand.shape}, "
                         f"expected {(len(model.gas_nodes), time.n_rep_days)}")
    for name, arr in data.families().items():
        if np.any(arr < 0):
            raise BuildError(f"negative {name} data")


def build_operations_block(model: EnergySystemModel, time: TimeStructure, data: SingleScenarioData,
                           fs: FirstStageBlock, inst: MilpInstance, tag: str = "s0") -> OperationsBlock:
    """Add one scenario's operations and return its cost expression."""
    _check_realization(model, time, data)
    v0, r0 = inst.num_vars, inst.num_rows
    sp = model.params
    T = time.n_hours
    w = time.hour_weights()
    W = time.day_weights()
    costs = {k: Expr() for k in OPERATING_COST_KEYS}
    nodes = [n.id for n in model.power_nodes]
    node_pos = {n: i for i, n in enumerate(nodes)}
    vre_pos = {p.id: v for v, p in enumerate(model.vre_types)}
    add_var, add_row, name = inst.add_var, inst.add_row, make_name

    gen = {}
    shed = {}
    emis_p = inst.add_var(name("emissions_power", tag), *FREE)
    emis_p_row = [(emis_p, 1.0)]
    for n in nodes:
        ni = node_pos[n]
        for p in model.plant_types:
            x = fs.operating[(n, p.id)]
            cap = p.nameplate
            fuel_paid = not (model.joint and p.is_gas_fired)
            for t in range(T):
                j = add_var(name("gen", tag, n, p.id, t))
                gen[(n, p.id, t)] = j
                if fuel_paid:
                    costs["fuel"].add(j, w[t] * p.fuel_price * p.heat_rate)
                costs["vom"].add(j, w[t] * p.vom)
                if p.is_gas_fired:
                    emis_p_row.append((j, -w[t] * (1 - p.capture_rate) * sp.gas_emission_factor * p.heat_rate))
                if p.is_thermal:
                    add_row(name("gen_min", tag, n, p.id, t), [(j, 1.0), (x, -p.min_stable_output * cap)], GE, 0.0)
                    add_row(name("gen_max", tag, n, p.id, t), [(j, 1.0), (x, -cap)], LE, 0.0)
                    if not time.is_day_start(t):
                        prev = gen[(n, p.id, t - 1)]
                        lim = p.ramp_limit * cap
                        add_row(name("ramp_up", tag, n, p.id, t), [(j, 1.0), (prev, -1.0), (x, -lim)], LE, 0.0)
                        add_row(name("ramp_down", tag, n, p.id, t), [(prev, 1.0), (j, -1.0), (x, -lim)], LE, 0.0)
                else:
                    rho = float(data.capacity_factor[vre_pos[p.id], ni, t])
                    add_row(name("vre_avail", tag, n, p.id, t), [(j, 1.0), (x, -rho * cap)], LE, 0.0)
        for t in range(T):
            j = add_var(name("shed", tag, n, t))
            shed[(n, t)] = j
            costs["shed_power"].add(j, w[t] * sp.voll_power)
            add_row(name("shed_cap", tag, n, t), [(j, 1.0)], LE, float(data.power_demand[ni, t]))

    # storage
    storage = {}
    for n in model.power_nodes:
        for r in n.storage_types:
            st = model.storage(r)
            ycd, ylev = fs.storage_power[(n.id, r)], fs.storage_energy[(n.id, r)]
            ch, dis, lev = [], [], []
            for t in range(T):
                c = add_var(name("charge", tag, n.id, r, t))
                d = add_var(name("discharge", tag, n.id, r, t))
                lv = add_var(name("level", tag, n.id, r, t))
                ch.append(c)
                dis.append(d)
                lev.append(lv)
                coefs = [(lv, 1.0), (c, -st.charge_efficiency), (d, 1.0 / st.discharge_efficiency)]
                if time.is_day_start(t):
                    add_row(name("storage_start", tag, n.id, r, t), coefs, EQ, 0.0)
                else:
                    coefs.append((lev[t - 1], -(1.0 - st.self_discharge)))
                    add_row(name("storage_level", tag, n.id, r, t), coefs, EQ, 0.0)
                add_row(name("storage_charge_cap", tag, n.id, r, t), [(c, 1.0), (ycd, -1.0)], LE, 0.0)
                add_row(name("storage_discharge_cap", tag, n.id, r, t), [(d, 1.0), (ycd, -1.0)], LE, 0.0)
                add_row(name("storage_level_cap", tag, n.id, r, t), [(lv, 1.0), (ylev, -1.0)], LE, 0.0)
            storage[(n.id, r)] = {"charge": ch, "discharge": dis, "level": lev}

    # lines; orientation: +flow at the endpoint listed earlier in the node order
    flows = {}
    for ln in model.transmission_lines:
        for t in range(T):
            f = add_var(name("flow", tag, ln.id, t), *FREE)
            flows[(ln.id, t)] = f
            if ln.exists:
                add_row(name("line_existing", tag, ln.id, "up", t), [(f, 1.0)], LE, ln.existing_capacity)
                add_row(name("line_existing", tag, ln.id, "dn", t), [(f, 1.0)], GE, -ln.existing_capacity)
            else:
                z = fs.line_build[ln.id]
                cap = ln.candidate_capacity
                add_row(name("line_candidate", tag, ln.id, "up", t), [(f, 1.0), (z, -cap)], LE, 0.0)
                add_row(name("line_candidate", tag, ln.id, "dn", t), [(f, 1.0), (z, cap)], GE, 0.0)

    for n in model.power_nodes:
        ni = node_pos[n.id]
        for t in range(T):
            coefs = [(gen[(n.id, p.id, t)], 1.0) for p in model.plant_types]
            for ln in model.transmission_lines:
                if n.id in (ln.from_node, ln.to_node):
                    other = ln.to_node if ln.from_node == n.id else ln.from_node
                    coefs.append((flows[(ln.id, t)], float(np.sign(ni - node_pos[other]))))
            for r in n.storage_types:
                s = storage[(n.id, r)]
                coefs.append((s["discharge"][t], 1.0))
                coefs.append((s["charge"][t], -1.0))
            coefs.append((shed[(n.id, t)], 1.0))
            add_row(name("power_balance", tag, n.id, t), coefs, EQ, float(data.power_demand[ni, t]))

    gas_shed, lcf = {}, {}
    emis_g = None
    if model.joint:
        gas_shed, lcf, emis_g = _gas_block(model, time, data, fs, inst, tag, gen, costs, W)

    cap = sp.emissions_baseline_power + (sp.emissions_baseline_gas if model.joint else 0.0)
    add_row(name("emissions_power", tag), emis_p_row, EQ, 0.0)
    cap_row = [(emis_p, 1.0)] + ([(emis_g, 1.0)] if emis_g is not None else [])
    add_row(name("emissions_cap", tag), cap_row, LE, (1 - sp.reduction_goal) * cap)

    total = Expr()
    for e in costs.values():
        for j, c in e.items():
            total.add(j, c)
        total.const += e.const
    return OperationsBlock(tag, costs, total, emis_p, emis_g, shed, gen, gas_shed, lcf,
                           {f"{k[0]},{k[1]}": v for k, v in storage.items()},
                           (v0, inst.num_vars), (r0, inst.num_rows))


def _gas_block(model, time, data, fs, inst, tag, gen, costs, W):
    sp = model.params
    R = time.n_rep_days
    add_var, add_row, name = inst.add_var, inst.add_row, make_name
    gas_ids = [k.id for k in model.gas_nodes]
    kpos = {k: i for i, k in enumerate(gas_ids)}

    emis_g = add_var(name("emissions_gas", tag), *FREE)
    emis_row = [(emis_g, 1.0)]
    emis_rhs = 0.0

    pipe_flow = {}
    for pl in model.pipelines:
        for d in range(R):
            f = add_var(name("pipe_flow", tag, pl.id, d))
            pipe_flow[(pl.id, d)] = f
            add_row(name("pipe_flow", tag, pl.id, d), [(f, 1.0), (fs.pipe_active[pl.id], -pl.capacity)], LE, 0.0)

    to_power, to_liq, from_vap = {}, {}, {}
    for k in model.gas_nodes:
        for d in range(R):
            for n in k.adjacent_power_nodes:
                to_power[(k.id, n, d)] = add_var(name("gas_to_power", tag, k.id, n, d))
            for j in k.adjacent_svl_nodes:
                to_liq[(k.id, j, d)] = add_var(name("to_liquefier", tag, k.id, j, d))
                from_vap[(j, k.id, d)] = add_var(name("from_vaporizer", tag, j, k.id, d))

    gas_shed, lcf = {}, {}
    for k in model.gas_nodes:
        ki = kpos[k.id]
        for d in range(R):
            g = add_var(name("gas_supply", tag, k.id, d))
            a_l = add_var(name("lcf", tag, k.id, d))
            a_g = add_var(name("gas_shed", tag, k.id, d))
            gas_shed[(k.id, d)] = a_g
            lcf[(k.id, d)] = a_l
            costs["gas_import"].add(g, W[d] * sp.ng_price)
            costs["lcf"].add(a_l, W[d] * sp.lcf_price)
            costs["shed_gas"].add(a_g, W[d] * sp.voll_gas)
            dem = float(data.gas_demand[ki, d])
            coefs = [(g, 1.0), (a_l, 1.0), (a_g, 1.0)]
            for pl in model.pipelines:
                if pl.from_node == k.id:
                    coefs.append((pipe_flow[(pl.id, d)], -1.0))
                if pl.to_node == k.id:
                    coefs.append((pipe_flow[(pl.id, d)], 1.0))
            for n in k.adjacent_power_nodes:
                coefs.append((to_power[(k.id, n, d)], -1.0))
            for j in k.adjacent_svl_nodes:
                coefs.append((from_vap[(j, k.id, d)], 1.0))
                coefs.append((to_liq[(k.id, j, d)], -1.0))
            add_row(name("gas_balance", tag, k.id, d), coefs, EQ, dem)
            add_row(name("injection_min", tag, k.id, d), [(g, 1.0), (a_l, 1.0)], GE, k.injection_lower)
            add_row(name("injection_max", tag, k.id, d), [(g, 1.0), (a_l, 1.0)], LE, k.injection_upper)
            emis_row += [(a_l, W[d] * sp.gas_emission_factor), (a_g, W[d] * sp.gas_emission_factor)]
            emis_rhs += W[d] * sp.gas_emission_factor * dem

    for sv in model.svl_nodes:
        feeders = [k.id for k in model.gas_nodes if sv.id in k.adjacent_svl_nodes]
        liq, vap = [], []
        for d in range(R):
            s_l = add_var(name("liquefied", tag, sv.id, d))
            s_v = add_var(name("vaporized", tag, sv.id, d))
            liq.append(s_l)
            vap.append(s_v)
            if feeders:
                add_row(name("liquefaction", tag, sv.id, d),
                        [(s_l, 1.0)] + [(to_liq[(k, sv.id, d)], -1.0) for k in feeders], EQ, 0.0)
                add_row(name("vaporization", tag, sv.id, d),
                        [(s_v, 1.0)] + [(from_vap[(sv.id, k, d)], -1.0) for k in feeders], EQ, 0.0)
            else:
                inst.upper[s_l] = inst.upper[s_v] = 0.0
            add_row(name("vaporization_cap", tag, sv.id, d),
                    [(s_v, 1.0), (fs.svl_vapor[sv.id], -1.0)], LE, sv.vaporization_capacity)
        prev = None
        for c, d in enumerate(time.day_map):
            lv = add_var(name("svl_level", tag, sv.id, c))
            coefs = [(lv, 1.0), (liq[d], -sv.charge_efficiency), (vap[d], 1.0 / sv.discharge_efficiency)]
            if prev is not None:
                coefs.append((prev, -(1.0 - sv.boil_off)))
            add_row(name("svl_level", tag, sv.id, c), coefs, EQ, 0.0)
            add_row(name("svl_level_cap", tag, sv.id, c),
                    [(lv, 1.0), (fs.svl_storage[sv.id], -1.0)], LE, sv.storage_capacity)
            prev = lv

    gas_fired = [p for p in model.plant_types if p.is_gas_fired]
    for n in model.power_nodes:
        suppliers = n.adjacent_gas_nodes
        for d in range(R):
            coefs = [(to_power[(k, n.id, d)], 1.0) for k in suppliers]
            for p in gas_fired:
                for t in time.hours_of_day(d):
                    coefs.append((gen[(n.id, p.id, t)], -p.heat_rate))
            if not coefs:
                continue
            if not suppliers:
                # no gas reaches this node: gas-fired plants cannot run
                for j, _ in coefs:
                    inst.upper[j] = 0.0
                continue
            add_row(name("gas_to_power", tag, n.id, d), coefs, EQ, 0.0)

    add_row(name("emissions_gas", tag), emis_row, EQ, emis_rhs)
    return gas_shed, lcf, emis_g


@dataclass
class DeterministicBuild:
    instance: MilpInstance
    first_stage: FirstStageBlock
    operations: OperationsBlock


def build_deterministic(model: EnergySystemModel, time: TimeStructure, data: SingleScenarioData,
                        name: str = "deterministic") -> DeterministicBuild:
    inst = MilpInstance(name)
    fs = build_first_stage(model, inst)
    ops = build_operations_block(model, time, data, fs, inst, "s0")
    for j, c in ops.cost.items():
        inst.add_objective(j, c)
    inst.obj_constant += ops.cost.const
    return DeterministicBuild(inst, fs, ops)


def audit_rows(inst: MilpInstance) -> dict[str, int]:
    """Row count per family; raises if any row is outside :data:`ROW_FAMILIES`."""
    counts = inst.group_counts()
    unknown = sorted(set(counts) - set(ROW_FAMILIES))
    if unknown:
        raise BuildError(f"unclassified row families: {unknown}")
    return counts


def shedding_solution(model: EnergySystemModel, time: TimeStructure, data: SingleScenarioData,
                      fs: FirstStageBlock, ops: OperationsBlock, inst: MilpInstance,
                      first_stage_values: np.ndarray) -> np.ndarray:
    """Operations that shed all demand and produce nothing, given first-stage values.

    With zero minimum injection and zero minimum stable output (the
    shipped fixture) this point satisfies every row of the block, which
    is the complete-recourse argument made concrete.
    """
    x = np.zeros(inst.num_vars)
    x[fs.indices] = first_stage_values
    nodes = model.power_node_ids()
    for (n, t), j in ops.shed.items():
        x[j] = data.power_demand[nodes.index(n), t]
    if model.joint:
        gas_ids = model.gas_node_ids()
        for (k, d), j in ops.gas_shed.items():
            x[j] = data.gas_demand[gas_ids.index(k), d]
    return x
