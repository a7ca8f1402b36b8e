from dataclasses import replace

import numpy as np
import pytest

from mstsim.fixtures import random_micro_case
from mstsim.formulation import BUC, MST, Options
from mstsim.model import InitialState
from mstsim.results import audit_time_coupling
from mstsim.rolling import InvalidPlan, MissingSlot, carry_state, plan, run_rolling, solve_case


def test_week_plan_windows():
    hp = plan(168, 72, 48)
    assert hp.describe() == [
        "solve [1..72] commit [1..48]",
        "solve [49..120] commit [49..96]",
        "solve [97..168] commit [97..168]",
    ]
    assert hp.overlap == 24


def test_equal_window_and_commit_are_disjoint():
    hp = plan(12, 4, 4)
    assert [(w.solve_start, w.solve_stop) for w in hp.windows] == [(0, 4), (4, 8), (8, 12)]
    assert hp.overlap == 0


def test_full_window_is_monolithic():
    assert len(plan(24, 24, 12).windows) == 1


@pytest.mark.parametrize("T, W, C", [(10, 4, 0), (10, 3, 4), (10, 11, 2)])
def test_invalid_plans(T, W, C):
    with pytest.raises(InvalidPlan):
        plan(T, W, C)


def test_commit_ranges_tile_horizon():
    hp = plan(50, 13, 5)
    covered = [t for w in hp.windows for t in range(w.commit_start, w.commit_stop)]
    assert covered == list(range(50))


def _result_with_startup(variant=MST):
    case = random_micro_case(0, T=6)
    res = solve_case(case, variant, gap=0.0)
    return case, res


def test_carry_startup_history():
    case, res = _result_with_startup()
    g = next(g for g in case.syn_plants if g.min_up >= 2)
    u = res.plants[g.id]["u"]
    for t_star in range(case.T):
        state, _ = carry_state(res, case, t_star)
        hist = state.up_hist.get(g.id, ())
        for k in range(1, g.min_up):
            lo = t_star + k - g.min_up + 1
            want = int(u[max(lo, 0):t_star + 1].sum())
            assert (hist[k - 1] if k <= len(hist) else 0) == want


def test_carry_without_events_is_empty():
    case = random_micro_case(2, T=4)
    init = InitialState(s={g.id: 0 for g in case.syn_plants})
    res = solve_case(replace(case, scenario=replace(case.scenario)), MST, init=init, gap=0.0)
    # a slot with no switching in the last tau slots carries nothing
    for t_star in range(case.T):
        state, _ = carry_state(res, case, t_star)
        for g in case.syn_plants:
            window = slice(max(0, t_star - g.min_up + 2), t_star + 1)
            if res.plants[g.id]["u"][window].sum() == 0:
                assert g.id not in state.up_hist


def test_carry_storage_level():
    case, res = _result_with_startup()
    state, _ = carry_state(res, case, 3)
    assert state.storage["S1"] == res.storage["S1"]["soc"][3]


def test_carry_rejects_slot_outside_result():
    case, res = _result_with_startup()
    with pytest.raises(MissingSlot):
        carry_state(res, case, case.T)


def test_single_window_reproduces_monolithic_bitwise():
    case = random_micro_case(3, T=8)
    mono = solve_case(case, MST, gap=0.0)
    rolled = run_rolling(case, plan(case.T, case.T, 4), MST, gap=0.0)
    assert rolled.objective == mono.objective
    for gid in mono.plants:
        for q, arr in mono.plants[gid].items():
            np.testing.assert_array_equal(rolled.plants[gid][q], arr)


@pytest.mark.parametrize("variant", [MST, BUC])
def test_stitched_series_passes_time_coupling_audit(variant):
    case = random_micro_case(5, T=12, storage=False)
    res = run_rolling(case, plan(12, 6, 3), variant, gap=0.0)
    assert len(res.solves) == 3
    assert audit_time_coupling(res, case, res.initial) == []


def test_stitched_objective_close_to_monolithic():
    case = random_micro_case(6, T=12, storage=False)
    tau = max(max(g.min_up, g.min_down) for g in case.syn_plants)
    mono = solve_case(case, MST, gap=0.0)
    rolled = run_rolling(case, plan(12, 6 + tau, 6), MST, gap=0.0)
    assert rolled.objective >= mono.objective - 1e-6
    assert rolled.objective <= 1.01 * mono.objective


def test_storage_with_tiny_overlap_is_recorded():
    case = random_micro_case(8, T=12)
    mono = solve_case(case, MST, gap=0.0)
    rolled = run_rolling(case, plan(12, 4, 3), MST, gap=0.0)
    # myopic windows cannot beat perfect foresight
    assert rolled.objective >= mono.objective - 1e-6


def test_plan_must_match_case():
    case = random_micro_case(0, T=6)
    with pytest.raises(InvalidPlan):
        run_rolling(case, plan(8, 4, 2))


def test_options_reach_every_window():
    case = random_micro_case(0, T=6)
    res = run_rolling(case, plan(6, 3, 3), MST, Options(clipping=False), gap=0.0)
    assert res.meta["options"]["clipping"] is False


def test_default_plan_is_three_days_committing_two():
    from mstsim.rolling import default_plan

    p = default_plan(168)
    assert (p.W, p.C) == (72, 48)
    assert (default_plan(168, 0.5).W, default_plan(168, 0.5).C) == (144, 96)
    assert (default_plan(24).W, default_plan(24).C) == (24, 24)
