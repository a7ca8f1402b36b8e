import numpy as np
import pytest
from hypothesis import given, strategies as st

from mstsim.formulation import assemble
from mstsim.fixtures import two_node_case
from mstsim.milp import (MalformedModel, MilpModel, Sense, SolveStatus, UnknownBackend, VarKind,
                         lp_relax_solve, row_violations, solve, write_lp)

from oracles import enumerate_commitment, enumerate_milp, scipy_lp

BACKENDS = ("reference", "highs")


def _checked(model, **kw):
    res = solve(model, **kw)
    if res.status.has_solution:
        assert row_violations(model, res.x) == []
    return res


def _ceil_model():
    m = MilpModel()
    x = m.add_var("x", 0, 10, VarKind.INTEGER)
    m.add_objective(x, 1.0)
    m.add_row([(x, 1.0)], Sense.GE, 1.5, "lo")
    return m


@pytest.mark.parametrize("backend", BACKENDS)
def test_integer_rounds_up_bound(backend):
    res = _checked(_ceil_model(), gap=0.0, backend=backend)
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective == pytest.approx(2.0)
    assert res.x[0] == pytest.approx(2.0)


def test_lp_relaxation_of_ceiling_model():
    assert lp_relax_solve(_ceil_model()).objective == pytest.approx(1.5)


@pytest.mark.parametrize("backend", BACKENDS)
def test_contradictory_bounds_are_infeasible(backend):
    m = MilpModel()
    x = m.add_var("x", 0, 10, VarKind.INTEGER)
    m.add_row([(x, 1.0)], Sense.GE, 2.0, "a")
    m.add_row([(x, 1.0)], Sense.LE, 1.0, "b")
    assert solve(m, backend=backend).status is SolveStatus.INFEASIBLE


def test_binary_relaxation():
    m = MilpModel()
    x = m.add_var("x", kind=VarKind.BINARY)
    m.add_objective(x, 1.0)
    m.add_row([(x, 1.0)], Sense.GE, 0.3, "lo")
    res = lp_relax_solve(m)
    assert res.objective == pytest.approx(0.3)
    assert res.x[0] == pytest.approx(0.3)


def test_integral_lp_matches_milp():
    m = MilpModel()
    x = m.add_var("x", 0, 5, VarKind.INTEGER)
    m.add_objective(x, 1.0)
    m.add_row([(x, 1.0)], Sense.GE, 2.0, "lo")
    assert lp_relax_solve(m).objective == pytest.approx(solve(m, gap=0).objective)


@pytest.mark.parametrize("backend", BACKENDS)
def test_knapsack(backend):
    m = MilpModel()
    x = m.add_var("x", kind=VarKind.BINARY)
    y = m.add_var("y", kind=VarKind.BINARY)
    m.add_objective(x, -3.0)
    m.add_objective(y, -2.0)
    m.add_row([(x, 1.0), (y, 1.0)], Sense.LE, 1.0, "cap")
    res = _checked(m, gap=0.0, backend=backend)
    assert res.objective == pytest.approx(-3.0)
    assert res.x[0] == pytest.approx(1.0) and res.x[1] == pytest.approx(0.0)


def test_unknown_backend():
    with pytest.raises(UnknownBackend):
        solve(_ceil_model(), backend="cplex")


def test_duplicate_names_rejected():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(MalformedModel):
        m.add_var("x")


def test_sealed_model_rejects_edits():
    m = _ceil_model()
    m.seal()
    with pytest.raises(MalformedModel):
        m.add_var("y")


def test_row_violations_detects_breach():
    m = _ceil_model()
    assert row_violations(m, [2.0]) == []
    assert any("lo" in v for v in row_violations(m, [1.0]))
    assert any("integral" in v for v in row_violations(m, [1.7]))


def test_two_plant_unit_commitment_matches_enumeration():
    from dataclasses import replace

    from mstsim.model import GeneratorCluster, PlantClass
    base = two_node_case(T=6)
    a = replace(base.plants[0], ramp_up=60.0, ramp_down=60.0, min_up=2, min_down=2)
    b = GeneratorCluster("h", "A", PlantClass.SYN_THERMAL, units=1, p_min=30.0, p_max=80.0,
                         c_fix=30.0, c_su=20.0, c_sd=5.0, c_var=15.0, inertia_h=3.0, rating=90.0)
    load = np.array([150.0, 170.0, 120.0, 90.0, 160.0, 150.0])
    sc = replace(base.scenario, consumer_load={"c": load})
    case = replace(base, plants=(a, b), scenario=sc)
    ctx = assemble(case)

    def ok(t, counts):
        na, nb = counts
        lo = na * a.p_min + nb * b.p_min
        hi = na * a.p_max + nb * b.p_max
        return lo <= load[t] <= hi

    want = enumerate_commitment(ctx, ok)
    got = _checked(ctx.model, gap=0.0, backend="reference")
    assert got.objective == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_reported_gap_within_request(backend):
    from mstsim.fixtures import random_micro_case
    ctx = assemble(random_micro_case(2, T=6))
    res = _checked(ctx.model, gap=0.01, backend=backend)
    assert res.status is SolveStatus.OPTIMAL
    assert res.gap <= 0.01


def test_solve_is_reproducible():
    from mstsim.fixtures import random_micro_case
    ctx = assemble(random_micro_case(5, T=6))
    a = solve(ctx.model, gap=0.0)
    b = solve(ctx.model, gap=0.0)
    assert a.status == b.status
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.x, b.x)


def test_lp_dump_round_trips_through_highs(tmp_path):
    import highspy

    from mstsim.fixtures import random_micro_case
    ctx = assemble(random_micro_case(1, T=4))
    path = write_lp(ctx.model, tmp_path / "m.lp")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    ours = solve(ctx.model, gap=0.0, backend="highs")
    assert h.getInfo().objective_function_value == pytest.approx(ours.objective, rel=1e-7)


@st.composite
def small_milps(draw):
    m = MilpModel()
    n_int = draw(st.integers(1, 3))
    n_cont = draw(st.integers(0, 2))
    xs = []
    for j in range(n_int):
        xs.append(m.add_var(f"i{j}", 0, draw(st.integers(1, 3)), VarKind.INTEGER))
    for j in range(n_cont):
        xs.append(m.add_var(f"c{j}", 0, draw(st.integers(1, 5))))
    coef = st.integers(-4, 4)
    for j in xs:
        m.add_objective(j, draw(coef))
    for r in range(draw(st.integers(1, 3))):
        row = [(j, draw(coef)) for j in xs]
        sense = draw(st.sampled_from([Sense.LE, Sense.GE]))
        m.add_row(row, sense, draw(st.integers(-3, 6)) + 0.5 * draw(st.integers(0, 1)), f"r{r}")
    return m


@given(small_milps())
def test_reference_solver_matches_enumeration(model):
    want = enumerate_milp(model)
    res = _checked(model, gap=0.0, backend="reference")
    if want is None:
        assert res.status is SolveStatus.INFEASIBLE
    else:
        assert res.status is SolveStatus.OPTIMAL
        assert res.objective == pytest.approx(want, abs=1e-6)


@given(small_milps())
def test_lp_relaxation_matches_scipy_and_bounds_milp(model):
    want, _ = scipy_lp(model)
    res = lp_relax_solve(model)
    if want is None:
        assert res.status is not SolveStatus.OPTIMAL
        return
    assert res.objective == pytest.approx(want, abs=1e-6)
    milp = solve(model, gap=0.0)
    if milp.status.has_solution:
        assert res.objective <= milp.objective + 1e-6
