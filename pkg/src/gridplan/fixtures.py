"""Small synthetic three-state power and gas system used by tests, examples, and the CLI.

Costs are annualized and loosely shaped after published technology cost
ranges; they are illustrative, not calibrated to any real system.
"""

from __future__ import annotations

import math

from .network import (CCS, GAS_FIRED, THERMAL, VRE, EnergySystemModel, GasNode, Pipeline,
                      PlantType, PowerNode, ResourceLimit, StorageType, SvlNode,
                      SystemParameters, TransmissionLine)
from .scenario import ScenarioSet, SyntheticSpec, generate_synthetic

POWER_COORDS = {"BOS": (42.36, -71.06), "HFD": (41.76, -72.67), "PVD": (41.82, -71.41)}


def fixture_model(reduction_goal: float = 0.0, mode: str = "joint") -> EnergySystemModel:
    power = (
        PowerNode("BOS", *POWER_COORDS["BOS"], "MA", ("li_ion",), ("G_BOS",)),
        PowerNode("HFD", *POWER_COORDS["HFD"], "CT", ("li_ion",), ("G_HFD",)),
        PowerNode("PVD", *POWER_COORDS["PVD"], "RI", ("li_ion",), ("G_PVD",)),
    )
    gas = (
        GasNode("G_BOS", 42.40, -71.10, 0.0, 8_000.0, ("BOS",), ("LNG_BOS",)),
        GasNode("G_HFD", 41.80, -72.70, 0.0, 8_000.0, ("HFD",), ()),
        GasNode("G_PVD", 41.85, -71.45, 0.0, 8_000.0, ("PVD",), ("LNG_PVD",)),
        GasNode("G_HUB", 42.00, -73.50, 0.0, 220_000.0, (), ()),
    )
    svl = (
        SvlNode("LNG_BOS", storage_capacity=300_000.0, vaporization_capacity=15_000.0,
                liquefaction_capacity=5_000.0, charge_efficiency=0.9, discharge_efficiency=0.95,
                boil_off=0.001, storage_capex=1.5, storage_fom=0.2, vaporization_capex=60.0,
                vaporization_fom=10.0),
        SvlNode("LNG_PVD", storage_capacity=100_000.0, vaporization_capacity=5_000.0,
                liquefaction_capacity=2_000.0, charge_efficiency=0.9, discharge_efficiency=0.95,
                boil_off=0.001, storage_capex=1.5, storage_fom=0.2, vaporization_capex=60.0,
                vaporization_fom=10.0),
    )
    lines = (
        TransmissionLine("L_BOS_HFD", "BOS", "HFD", True, existing_capacity=250.0, fom=2.0e5),
        TransmissionLine("L_HFD_PVD", "HFD", "PVD", True, existing_capacity=150.0, fom=1.5e5),
        TransmissionLine("L_BOS_PVD", "BOS", "PVD", True, existing_capacity=120.0, fom=1.0e5),
        TransmissionLine("C_BOS_HFD", "BOS", "HFD", False, candidate_capacity=300.0,
                         capex=3.0e6, fom=2.0e5),
        TransmissionLine("C_HFD_PVD", "HFD", "PVD", False, candidate_capacity=300.0,
                         capex=2.5e6, fom=1.5e5),
    )
    pipes = (
        Pipeline("P_HUB_HFD", "G_HUB", "G_HFD", True, 200_000.0, decommission_cost=2.0e6, fom=1.0e6),
        Pipeline("P_HFD_BOS", "G_HFD", "G_BOS", True, 110_000.0, decommission_cost=1.5e6, fom=8.0e5),
        Pipeline("P_HFD_PVD", "G_HFD", "G_PVD", False, 60_000.0, capex=4.0e6, fom=5.0e5),
    )
    plants = (
        PlantType("ng", frozenset({THERMAL, GAS_FIRED}), nameplate=100.0, ramp_limit=0.6,
                  heat_rate=7.5, capex=8.0e6, fom=1.2e6, vom=3.0, fuel_price=5.45,
                  decommission_cost=1.0e6,
                  initial_count=(("BOS", 3.0), ("HFD", 2.0), ("PVD", 1.0))),
        PlantType("ng_ccs", frozenset({THERMAL, GAS_FIRED, CCS}), nameplate=100.0, ramp_limit=0.5,
                  heat_rate=8.5, capture_rate=0.9, capex=1.5e7, fom=2.4e6, vom=5.0,
                  fuel_price=5.45, decommission_cost=1.5e6),
        PlantType("solar", frozenset({VRE}), nameplate=1.0, capex=6.5e4, fom=1.8e4),
        PlantType("wind", frozenset({VRE}), nameplate=1.0, capex=1.1e5, fom=4.0e4,
                  initial_count=(("BOS", 50.0), ("HFD", 20.0))),
    )
    storage = (StorageType("li_ion", charge_efficiency=0.92, discharge_efficiency=0.92,
                           self_discharge=0.0, power_capex=4.0e4, power_fom=1.0e4,
                           energy_capex=1.8e4, energy_fom=2.0e3),)
    limits = (ResourceLimit("wind_sites", ("wind",), 900.0),)
    params = SystemParameters(emissions_baseline_power=1.6e6, emissions_baseline_gas=4.0e6,
                              reduction_goal=reduction_goal, gas_emission_factor=0.05306,
                              voll_power=10_000.0, voll_gas=10_000.0, ng_price=5.45,
                              lcf_price=20.0, mmbtu_per_mwh=3.412)
    return EnergySystemModel(power, plants, gas, svl, lines, pipes, storage, limits, params, mode)


def fixture_spec(n_scenarios: int = 5, n_rep_days: int = 5, hours_per_day: int = 24,
                 days_per_rep: int = 73, **overrides) -> SyntheticSpec:
    kw = dict(
        power_nodes=("BOS", "HFD", "PVD"),
        gas_nodes=("G_BOS", "G_HFD", "G_PVD", "G_HUB"),
        vre_types=("solar", "wind"),
        vre_kinds=("solar", "wind"),
        n_scenarios=n_scenarios,
        n_rep_days=n_rep_days,
        hours_per_day=hours_per_day,
        days_per_rep=days_per_rep,
        base_power=(420.0, 300.0, 200.0),
        base_gas=(45_000.0, 30_000.0, 18_000.0, 0.0),
        noise=0.08,
        spatial_corr=0.7,
        temporal_corr=0.6,
        level_shift=0.06,
        cf_noise=0.25,
        wind_phase=(0.0, math.pi, 0.5 * math.pi),
        cf_spatial_corr=-0.4,
    )
    kw.update(overrides)
    return SyntheticSpec(**kw)


def fixture_scenarios(seed: int = 0, n_scenarios: int = 5, **overrides) -> ScenarioSet:
    return generate_synthetic(fixture_spec(n_scenarios, **overrides), seed)
