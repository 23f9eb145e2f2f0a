"""Static description of the joint power and gas system.

The document format is JSON with one array per component type and a
``schema_version`` field; the schema lives in ``docs/network.schema.json``
(a copy ships inside the package). Structural problems are reported by
``jsonschema`` and semantic ones (dangling references, bad ranges) by
:func:`validate_model`; both raise :class:`NetworkError` carrying the JSON
path of the offending value.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

SCHEMA_VERSION = 1

THERMAL = "thermal"
VRE = "vre"
GAS_FIRED = "gas_fired"
CCS = "ccs"
PLANT_CLASSES = (THERMAL, VRE, GAS_FIRED, CCS)

JOINT = "joint"
POWER_ONLY = "power_only"
MODES = (JOINT, POWER_ONLY)

_ID_RE = re.compile(r"^[A-Za-z0-9_]+$")


class NetworkError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class PowerNode:
    id: str
    lat: float
    lon: float
    state_label: str = ""
    storage_types: tuple[str, ...] = ()
    adjacent_gas_nodes: tuple[str, ...] = ()


@dataclass(frozen=True)
class GasNode:
    id: str
    lat: float
    lon: float
    injection_lower: float = 0.0
    injection_upper: float = 0.0
    adjacent_power_nodes: tuple[str, ...] = ()
    adjacent_svl_nodes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SvlNode:
    id: str
    storage_capacity: float = 0.0
    vaporization_capacity: float = 0.0
    liquefaction_capacity: float = 0.0  # carried as data; no constraint uses it
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    boil_off: float = 0.0
    storage_capex: float = 0.0
    storage_fom: float = 0.0
    vaporization_capex: float = 0.0
    vaporization_fom: float = 0.0


@dataclass(frozen=True)
class TransmissionLine:
    id: str
    from_node: str
    to_node: str
    exists: bool
    existing_capacity: float = 0.0
    candidate_capacity: float = 0.0
    capex: float = 0.0
    fom: float = 0.0
    susceptance: float = 0.0  # inert: flows follow the transport model

    @property
    def capacity(self) -> float:
        return self.existing_capacity if self.exists else self.candidate_capacity


@dataclass(frozen=True)
class Pipeline:
    id: str
    from_node: str
    to_node: str
    exists: bool
    capacity: float
    capex: float = 0.0
    decommission_cost: float = 0.0
    fom: float = 0.0


@dataclass(frozen=True)
class PlantType:
    id: str
    classes: frozenset[str]
    nameplate: float
    min_stable_output: float = 0.0
    ramp_limit: float = 1.0
    heat_rate: float = 0.0
    capture_rate: float = 0.0
    capex: float = 0.0
    fom: float = 0.0
    vom: float = 0.0
    fuel_price: float = 0.0
    decommission_cost: float = 0.0
    startup_cost: float = 0.0  # inert
    initial_count: tuple[tuple[str, float], ...] = ()

    @property
    def is_thermal(self) -> bool:
        return THERMAL in self.classes

    @property
    def is_vre(self) -> bool:
        return VRE in self.classes

    @property
    def is_gas_fired(self) -> bool:
        return GAS_FIRED in self.classes

    def initial(self, node: str) -> float:
        return dict(self.initial_count).get(node, 0.0)


@dataclass(frozen=True)
class StorageType:
    id: str
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    self_discharge: float = 0.0  # inert under the per-day reset, see builder
    power_capex: float = 0.0
    power_fom: float = 0.0
    energy_capex: float = 0.0
    energy_fom: float = 0.0


@dataclass(frozen=True)
class ResourceLimit:
    id: str
    plant_types: tuple[str, ...]
    cap: float


@dataclass(frozen=True)
class SystemParameters:
    emissions_baseline_power: float = 0.0
    emissions_baseline_gas: float = 0.0
    reduction_goal: float = 0.0
    gas_emission_factor: float = 0.05306
    voll_power: float = 10_000.0
    voll_gas: float = 10_000.0
    ng_price: float = 5.45
    lcf_price: float = 20.0
    mmbtu_per_mwh: float = 3.412


@dataclass(frozen=True)
class EnergySystemModel:
    power_nodes: tuple[PowerNode, ...]
    plant_types: tuple[PlantType, ...]
    gas_nodes: tuple[GasNode, ...] = ()
    svl_nodes: tuple[SvlNode, ...] = ()
    transmission_lines: tuple[TransmissionLine, ...] = ()
    pipelines: tuple[Pipeline, ...] = ()
    storage_types: tuple[StorageType, ...] = ()
    resource_limits: tuple[ResourceLimit, ...] = ()
    params: SystemParameters = field(default_factory=SystemParameters)
    mode: str = JOINT

    @property
    def joint(self) -> bool:
        return self.mode == JOINT

    @property
    def vre_types(self) -> tuple[PlantType, ...]:
        return tuple(p for p in self.plant_types if p.is_vre)

    def power_node_ids(self) -> list[str]:
        return [n.id for n in self.power_nodes]

    def gas_node_ids(self) -> list[str]:
        return [k.id for k in self.gas_nodes] if self.joint else []

    def plant(self, pid: str) -> PlantType:
        return _by_id(self.plant_types)[pid]

    def storage(self, sid: str) -> StorageType:
        return _by_id(self.storage_types)[sid]

    def with_mode(self, mode: str) -> "EnergySystemModel":
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        return replace(self, mode=mode)

    def with_params(self, **kw) -> "EnergySystemModel":
        return replace(self, params=replace(self.params, **kw))


def _by_id(items) -> dict[str, Any]:
    return {x.id: x for x in items}


# -- validation -------------------------------------------------------------

def _check_ids(items, path: str) -> dict[str, int]:
    seen: dict[str, int] = {}
    for i, x in enumerate(items):
        if not _ID_RE.match(x.id):
            raise NetworkError(f"{path}[{i}].id", f"identifier {x.id!r} must match [A-Za-z0-9_]+")
        if x.id in seen:
            raise NetworkError(f"{path}[{i}].id", f"duplicate id {x.id!r}")
        seen[x.id] = i
    return seen


def _check_range(value: float, lo: float, hi: float, path: str, lo_open=False, hi_open=False) -> None:
    bad = value < lo or value > hi or (lo_open and value == lo) or (hi_open and value == hi)
    if bad:
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        raise NetworkError(path, f"value {value} outside {left}{lo}, {hi}{right}")


def validate_model(m: EnergySystemModel) -> None:
    """Semantic checks; raises :class:`NetworkError` with a JSON path."""
    inf = float("inf")
    if m.mode not in MODES:
        raise NetworkError("$.mode", f"unknown mode {m.mode!r}")
    if not m.power_nodes:
        raise NetworkError("$.power_nodes", "at least one power node is required")
    pn = _check_ids(m.power_nodes, "$.power_nodes")
    gn = _check_ids(m.gas_nodes, "$.gas_nodes")
    sv = _check_ids(m.svl_nodes, "$.svl_nodes")
    st = _check_ids(m.storage_types, "$.storage_types")
    pt = _check_ids(m.plant_types, "$.plant_types")
    _check_ids(m.transmission_lines, "$.transmission_lines")
    _check_ids(m.pipelines, "$.pipelines")
    _check_ids(m.resource_limits, "$.resource_limits")
    if m.mode == JOINT and not m.gas_nodes:
        raise NetworkError("$.gas_nodes", "joint mode requires a gas network")

    for i, n in enumerate(m.power_nodes):
        p = f"$.power_nodes[{i}]"
        for j, s in enumerate(n.storage_types):
            if s not in st:
                raise NetworkError(f"{p}.storage_types[{j}]", f"unknown storage type {s!r}")
        for j, g in enumerate(n.adjacent_gas_nodes):
            if g not in gn:
                raise NetworkError(f"{p}.adjacent_gas_nodes[{j}]", f"unknown gas node {g!r}")
            if n.id not in m.gas_nodes[gn[g]].adjacent_power_nodes:
                raise NetworkError(f"{p}.adjacent_gas_nodes[{j}]",
                                   f"gas node {g!r} does not list {n.id!r} as adjacent")
    for i, k in enumerate(m.gas_nodes):
        p = f"$.gas_nodes[{i}]"
        if not 0 <= k.injection_lower <= k.injection_upper:
            raise NetworkError(f"{p}.injection_lower", "need 0 <= injection_lower <= injection_upper")
        for j, e in enumerate(k.adjacent_power_nodes):
            if e not in pn:
                raise NetworkError(f"{p}.adjacent_power_nodes[{j}]", f"unknown power node {e!r}")
            if k.id not in m.power_nodes[pn[e]].adjacent_gas_nodes:
                raise NetworkError(f"{p}.adjacent_power_nodes[{j}]",
                                   f"power node {e!r} does not list {k.id!r} as adjacent")
        for j, s in enumerate(k.adjacent_svl_nodes):
            if s not in sv:
                raise NetworkError(f"{p}.adjacent_svl_nodes[{j}]", f"unknown SVL node {s!r}")
    for i, s in enumerate(m.svl_nodes):
        p = f"$.svl_nodes[{i}]"
        for name in ("storage_capacity", "vaporization_capacity", "liquefaction_capacity",
                     "storage_capex", "storage_fom", "vaporization_capex", "vaporization_fom"):
            _check_range(getattr(s, name), 0, inf, f"{p}.{name}")
        _check_range(s.charge_efficiency, 0, 1, f"{p}.charge_efficiency", lo_open=True)
        _check_range(s.discharge_efficiency, 0, 1, f"{p}.discharge_efficiency", lo_open=True)
        _check_range(s.boil_off, 0, 1, f"{p}.boil_off", hi_open=True)
    for i, ln in enumerate(m.transmission_lines):
        p = f"$.transmission_lines[{i}]"
        for end, key in ((ln.from_node, "from_node"), (ln.to_node, "to_node")):
            if end not in pn:
                raise NetworkError(f"{p}.{key}", f"unknown power node {end!r}")
        if ln.from_node == ln.to_node:
            raise NetworkError(f"{p}.to_node", "line endpoints must differ")
        if ln.exists and ln.existing_capacity <= 0:
            raise NetworkError(f"{p}.existing_capacity", "existing line needs positive capacity")
        if not ln.exists and ln.candidate_capacity <= 0:
            raise NetworkError(f"{p}.candidate_capacity", "candidate line needs positive capacity")
        for name in ("capex", "fom"):
            _check_range(getattr(ln, name), 0, inf, f"{p}.{name}")
    for i, pl in enumerate(m.pipelines):
        p = f"$.pipelines[{i}]"
        for end, key in ((pl.from_node, "from_node"), (pl.to_node, "to_node")):
            if end not in gn:
                raise NetworkError(f"{p}.{key}", f"unknown gas node {end!r}")
        if pl.from_node == pl.to_node:
            raise NetworkError(f"{p}.to_node", "pipeline endpoints must differ")
        if pl.capacity <= 0:
            raise NetworkError(f"{p}.capacity", "capacity must be positive")
        for name in ("capex", "decommission_cost", "fom"):
            _check_range(getattr(pl, name), 0, inf, f"{p}.{name}")
    for i, t in enumerate(m.plant_types):
        p = f"$.plant_types[{i}]"
        unknown = set(t.classes) - set(PLANT_CLASSES)
        if unknown:
            raise NetworkError(f"{p}.classes", f"unknown classes {sorted(unknown)}")
        if t.is_thermal == t.is_vre:
            raise NetworkError(f"{p}.classes", "a plant type is either thermal or vre")
        if t.is_vre and (t.is_gas_fired or t.heat_rate != 0 or t.fuel_price != 0):
            raise NetworkError(f"{p}.classes", "vre plants burn no fuel")
        if t.capture_rate != 0 and CCS not in t.classes:
            raise NetworkError(f"{p}.capture_rate", "capture_rate needs the ccs class")
        _check_range(t.nameplate, 0, inf, f"{p}.nameplate", lo_open=True)
        _check_range(t.min_stable_output, 0, 1, f"{p}.min_stable_output")
        _check_range(t.ramp_limit, 0, 1, f"{p}.ramp_limit")
        _check_range(t.capture_rate, 0, 1, f"{p}.capture_rate")
        for name in ("heat_rate", "capex", "fom", "vom", "fuel_price", "decommission_cost",
                     "startup_cost"):
            _check_range(getattr(t, name), 0, inf, f"{p}.{name}")
        for node, count in t.initial_count:
            if node not in pn:
                raise NetworkError(f"{p}.initial_count.{node}", f"unknown power node {node!r}")
            _check_range(count, 0, inf, f"{p}.initial_count.{node}")
            if t.is_thermal and count != int(count):
                raise NetworkError(f"{p}.initial_count.{node}", "thermal counts must be integral")
    for i, s in enumerate(m.storage_types):
        p = f"$.storage_types[{i}]"
        _check_range(s.charge_efficiency, 0, 1, f"{p}.charge_efficiency", lo_open=True)
        _check_range(s.discharge_efficiency, 0, 1, f"{p}.discharge_efficiency", lo_open=True)
        _check_range(s.self_discharge, 0, 1, f"{p}.self_discharge", hi_open=True)
        for name in ("power_capex", "power_fom", "energy_capex", "energy_fom"):
            _check_range(getattr(s, name), 0, inf, f"{p}.{name}")
    for i, r in enumerate(m.resource_limits):
        p = f"$.resource_limits[{i}]"
        for j, pid in enumerate(r.plant_types):
            if pid not in pt:
                raise NetworkError(f"{p}.plant_types[{j}]", f"unknown plant type {pid!r}")
        _check_range(r.cap, 0, inf, f"{p}.cap")
    sp = m.params
    for name in ("emissions_baseline_power", "emissions_baseline_gas", "gas_emission_factor",
                 "voll_power", "voll_gas", "ng_price", "lcf_price"):
        _check_range(getattr(sp, name), 0, inf, f"$.system_parameters.{name}")
    _check_range(sp.reduction_goal, 0, 1, "$.system_parameters.reduction_goal")
    _check_range(sp.mmbtu_per_mwh, 0, inf, "$.system_parameters.mmbtu_per_mwh", lo_open=True)


# -- JSON I/O -----------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("gridplan").joinpath("network.schema.json").read_text())


def _json_path(error: jsonschema.ValidationError) -> str:
    out = "$"
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def model_from_dict(doc: dict) -> EnergySystemModel:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise NetworkError(_json_path(errors[0]), errors[0].message)
    if doc["schema_version"] != SCHEMA_VERSION:
        raise NetworkError("$.schema_version", f"unsupported version {doc['schema_version']}")

    def tup(x):
        return tuple(x or ())

    power = tuple(PowerNode(d["id"], d["lat"], d["lon"], d.get("state_label", ""),
                            tup(d.get("storage_types")), tup(d.get("adjacent_gas_nodes")))
                  for d in doc["power_nodes"])
    gas = tuple(GasNode(d["id"], d["lat"], d["lon"], d.get("injection_lower", 0.0),
                        d.get("injection_upper", 0.0), tup(d.get("adjacent_power_nodes")),
                        tup(d.get("adjacent_svl_nodes")))
                for d in doc.get("gas_nodes", []))
    svl = tuple(SvlNode(**d) for d in doc.get("svl_nodes", []))
    lines = tuple(TransmissionLine(**d) for d in doc.get("transmission_lines", []))
    pipes = tuple(Pipeline(**d) for d in doc.get("pipelines", []))
    plants = []
    for d in doc["plant_types"]:
        d = dict(d)
        d["classes"] = frozenset(d["classes"])
        d["initial_count"] = tuple(sorted(d.get("initial_count", {}).items()))
        plants.append(PlantType(**d))
    storage = tuple(StorageType(**d) for d in doc.get("storage_types", []))
    limits = tuple(ResourceLimit(d["id"], tuple(d["plant_types"]), d["cap"])
                   for d in doc.get("resource_limits", []))
    params = SystemParameters(**doc.get("system_parameters", {}))
    model = EnergySystemModel(power, tuple(plants), gas, svl, lines, pipes, storage, limits,
                              params, doc.get("mode", JOINT))
    validate_model(model)
    return model


def model_to_dict(m: EnergySystemModel) -> dict:
    def plain(obj) -> dict:
        out = {}
        for k, v in obj.__dict__.items():
            if isinstance(v, frozenset):
                v = sorted(v)
            elif k == "initial_count":
                v = dict(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out

    return {
        "schema_version": SCHEMA_VERSION,
        "mode": m.mode,
        "power_nodes": [plain(x) for x in m.power_nodes],
        "gas_nodes": [plain(x) for x in m.gas_nodes],
        "svl_nodes": [plain(x) for x in m.svl_nodes],
        "transmission_lines": [plain(x) for x in m.transmission_lines],
        "pipelines": [plain(x) for x in m.pipelines],
        "plant_types": [plain(x) for x in m.plant_types],
        "storage_types": [plain(x) for x in m.storage_types],
        "resource_limits": [plain(x) for x in m.resource_limits],
        "system_parameters": plain(m.params),
    }


def load_model(path: str | Path) -> EnergySystemModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise NetworkError("$", f"invalid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(m: EnergySystemModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), indent=2, sort_keys=True) + "\n")
