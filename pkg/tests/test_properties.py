"""Property tests over seeded micro-scenarios and small random networks."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mstsim.fixtures import random_micro_case, two_node_case
from mstsim.formulation import AGG, BUC, MST, Options
from mstsim.model import default_initial_state
from mstsim.results import audit_time_coupling
from mstsim.rolling import solve_case

seeds = st.integers(0, 10_000)
horizons = st.integers(2, 5)


def _solve(case, variant, **kw):
    return solve_case(case, variant, Options(**kw), gap=0.0)


@settings(max_examples=12)
@given(seeds, horizons)
def test_mst_never_costs_more_than_buc(seed, T):
    case = random_micro_case(seed, T=T, max_units=2)
    assert _solve(case, MST).objective <= _solve(case, BUC).objective * (1 + 1e-9) + 1e-6


@settings(max_examples=12)
@given(seeds, horizons)
def test_mst_equals_buc_without_ramps(seed, T):
    case = random_micro_case(seed, T=T, max_units=2, ramps=False)
    a, b = _solve(case, MST).objective, _solve(case, BUC).objective
    assert abs(a - b) <= 1e-6 * max(1.0, abs(a))


@settings(max_examples=12)
@given(seeds, horizons)
def test_clipping_does_not_change_objective(seed, T):
    case = random_micro_case(seed, T=T)
    a = _solve(case, MST).objective
    b = _solve(case, MST, clipping=False).objective
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@settings(max_examples=12)
@given(seeds, horizons)
def test_mst_never_costs_more_than_agg(seed, T):
    case = random_micro_case(seed, T=T)
    assert _solve(case, MST).objective <= _solve(case, AGG).objective + 1e-6


@settings(max_examples=25)
@given(st.lists(st.one_of(st.just(0.0), st.floats(20.0, 200.0)), min_size=1, max_size=4))
def test_flows_satisfy_kirchhoff(loads):
    # two 20-100 MW units at A serve load at B: zero or 20-200 MW is always feasible
    case = two_node_case(T=len(loads))
    sc = case.scenario
    sc = type(sc)(sc.T, consumers=sc.consumers, consumer_load={"c": np.array(loads)})
    res = _solve(type(case)(case.network, case.plants, sc), MST)
    np.testing.assert_allclose(res.plants["g"]["p"], loads, atol=1e-6)
    np.testing.assert_allclose(res.flows["AB"], loads, atol=1e-6)
    line = case.network.ac_lines[0]
    np.testing.assert_allclose(res.flows["AB"], line.susceptance * (res.angles["A"] - res.angles["B"]),
                               atol=1e-6)


@settings(max_examples=12)
@given(seeds, horizons, st.sampled_from([MST, BUC, AGG]))
def test_commitment_series_are_consistent(seed, T, variant):
    case = random_micro_case(seed, T=T)
    res = _solve(case, variant)
    init = default_initial_state(case.plants, case.storage, case.prosumers)
    assert audit_time_coupling(res, case, init) == []
    for g in case.syn_plants:
        s, u, d = (res.plants[g.id][q] for q in "sud")
        prev = np.concatenate([[0.0], s[:-1]])
        np.testing.assert_array_equal(u - d, s - prev)
        assert np.all((s >= 0) & (s <= g.units)) and np.all(u >= 0) and np.all(d >= 0)
        assert np.array_equal(s, np.round(s))
