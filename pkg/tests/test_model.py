from dataclasses import replace

import numpy as np
import pytest

from mstsim.fixtures import random_micro_case, two_node_case
from mstsim.model import (ACLine, GeneratorCluster, InitialState, NetworkModel, PlantClass,
                          StoragePlant, default_initial_state, validate_case)


def test_well_formed_two_node_case_is_valid():
    assert validate_case(two_node_case()) == []


def test_pmin_above_pmax_names_the_plant():
    case = two_node_case()
    bad = replace(case.plants[0], p_min=150.0)
    report = validate_case(replace(case, plants=(bad,)))
    assert len(report) == 1
    assert report[0].entity == "g"


def test_res_cluster_must_be_aggregated():
    case = two_node_case()
    wind = GeneratorCluster("w", "A", PlantClass.RES, units=3, p_max=50.0)
    sc = replace(case.scenario, res_avail={"w": np.full(case.T, 30.0)})
    report = validate_case(replace(case, plants=case.plants + (wind,), scenario=sc))
    assert any("aggregated" in v.message and v.entity == "w" for v in report)


def test_unknown_line_endpoint_is_reported():
    net = NetworkModel(("A",), ("R",), {"A": "R"}, (ACLine("L", "A", "Z", 1.0, 1.0),))
    case = replace(two_node_case(), network=net)
    assert any(v.entity == "L" for v in validate_case(case))


def test_short_trace_is_reported():
    case = two_node_case(T=4)
    sc = replace(case.scenario, consumer_load={"c": np.ones(3)})
    report = validate_case(replace(case, scenario=sc))
    assert any("length" in v.message for v in report)


def test_initial_history_cannot_exceed_online_units():
    init = InitialState(s={"g": 1}, p={"g": 50.0}, up_hist={"g": (2,)})
    assert validate_case(two_node_case(), init)


def test_initial_tes_outside_bounds_is_reported():
    case = random_micro_case(0, T=4)
    cst = next(g for g in case.plants if g.is_cst)
    init = replace(default_initial_state(case.plants, case.storage),
                   tes={cst.id: cst.tes_max + 1})
    assert any("TES" in v.message for v in validate_case(case, init))


def test_default_state_single_plant():
    init = default_initial_state(two_node_case().plants)
    assert init.s == {"g": 0}
    assert init.up_hist == {} and init.down_hist == {}


def test_default_state_stores_at_lower_bound():
    cst = GeneratorCluster("c", "A", PlantClass.SYN_CST, units=1, p_max=10.0,
                           tes_min=10.0, tes_max=50.0)
    sto = StoragePlant("s", "A", e_min=0.0, e_max=10.0)
    init = default_initial_state((cst,), (sto,))
    assert init.tes["c"] == 10.0
    assert init.storage["s"] == 0.0


def test_scenario_traces_are_read_only():
    case = two_node_case()
    with pytest.raises(ValueError):
        case.scenario.consumer_load["c"][0] = 5.0


def test_window_slices_every_trace():
    case = random_micro_case(3, T=10)
    sub = case.window(2, 7)
    assert sub.T == 5
    for name, key, arr in sub.scenario.traces():
        full = getattr(case.scenario, name)[key]
        np.testing.assert_array_equal(arr, full[2:7])


def test_ac_islands_split_on_hvdc():
    case = random_micro_case(0, T=2)
    islands = case.network.ac_islands()
    assert islands == [["N1", "N2", "N3"]]
    net = NetworkModel(("A", "B", "C"), ("R",), {"A": "R", "B": "R", "C": "R"},
                       (ACLine("AB", "A", "B", 1.0, 1.0),))
    assert net.ac_islands() == [["A", "B"], ["C"]]
