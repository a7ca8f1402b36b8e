import numpy as np
import pytest

from mstsim.fixtures import agg_illustration_case, random_micro_case, two_node_case
from mstsim.formulation import AGG, BUC, MST
from mstsim.io import SyntheticCaseSpec, generate_case
from mstsim.metrics import (compare, inertia_requirement, inertia_timeseries,
                            online_units_timeseries, res_spillage)
from mstsim.model import Consumer, GeneratorCluster, NetworkModel, PlantClass, Scenario
from mstsim.results import DispatchResult
from mstsim.rolling import solve_case


def _result(plants, T=1):
    return DispatchResult(MST, T, 1.0, plants)


def _one_plant_net():
    net = NetworkModel(("N",), ("R",), {"N": "R"})
    g = GeneratorCluster("g", "N", PlantClass.SYN_THERMAL, units=3, p_max=100.0,
                         inertia_h=5.0, rating=100.0)
    return net, g


def test_inertia_of_three_units():
    net, g = _one_plant_net()
    res = _result({"g": {"s": np.array([3.0]), "p": np.array([150.0])}})
    assert inertia_timeseries(res, net, [g])["R"][0] == 1500.0


def test_inertia_all_off():
    net, g = _one_plant_net()
    res = _result({"g": {"s": np.array([0.0]), "p": np.array([0.0])}})
    assert inertia_timeseries(res, net, [g])["R"][0] == 0.0


def test_online_units_sum():
    res = _result({k: {"s": np.array([v]), "p": np.zeros(1)} for k, v in
                   (("a", 1.0), ("b", 2.0), ("c", 0.0))})
    assert online_units_timeseries(res)[0] == 3
    assert online_units_timeseries(_result({}))[0] == 0


def test_spillage():
    sc = Scenario(1, res_avail={"w": [80.0]})
    w = GeneratorCluster("w", "N", PlantClass.RES, p_max=80.0)
    assert res_spillage(_result({"w": {"p": np.array([80.0])}}), sc, [w])[1] == 0.0
    per_slot, total = res_spillage(_result({"w": {"p": np.array([50.0])}}), sc, [w])
    assert per_slot[0] == 30.0 and total == 30.0


def test_no_spillage_without_res():
    b = generate_case(SyntheticCaseSpec(penetration=0.0, T=4))
    res = _result({}, T=4)
    per_slot, total = res_spillage(res, b.case.scenario, b.case.plants)
    assert total == 0.0 and not per_slot.any()


def test_identical_results_compare_to_zero():
    case = two_node_case(T=3)
    res = solve_case(case, MST, gap=0.0)
    cmp = compare(res, res, case.network, case.plants)
    assert cmp.is_zero()
    assert cmp.objective_delta == 0.0


def test_mst_and_buc_agree_on_fixture():
    case = random_micro_case(0, T=8)
    a = solve_case(case, MST, gap=0.0)
    b = solve_case(case, BUC, gap=0.0)
    cmp = compare(a, b, case.network, case.plants)
    assert abs(cmp.objective_rel_delta) <= 1e-6
    need = inertia_requirement(case.scenario, case.network)
    for res in (a, b):
        have = inertia_timeseries(res, case.network, case.plants)
        for r in need:
            assert np.all(have[r] >= need[r] - 1e-6)
    assert cmp.counts_b["commitment"] > cmp.counts_a["commitment"]


def test_agg_diverges_from_buc_at_low_demand():
    case = agg_illustration_case(0.8)
    buc = solve_case(case, BUC, gap=0.0)
    agg = solve_case(case, AGG, gap=0.0)
    cmp = compare(buc, agg, case.network, case.plants)
    assert buc.online_units()[0] >= 1
    assert agg.online_units()[0] == 0
    assert cmp.max_online_delta >= 1


def test_compare_rejects_mismatched_horizons():
    a = solve_case(two_node_case(T=2), MST, gap=0.0)
    b = solve_case(two_node_case(T=3), MST, gap=0.0)
    with pytest.raises(ValueError):
        compare(a, b, two_node_case().network, two_node_case().plants)


def test_comparison_rows_are_long_format():
    case = two_node_case(T=2)
    res = solve_case(case, MST, gap=0.0)
    rows = compare(res, res, case.network, case.plants).rows()
    assert ("online_delta" in {r[1] for r in rows}) and len(rows) == 2 * (1 + len(case.network.regions))
