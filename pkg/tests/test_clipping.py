import pytest

from mstsim.clipping import MIN_DOWN, MIN_UP, RAMP_DOWN, RAMP_UP, clip_plan, ramp_binding
from mstsim.fixtures import random_micro_case
from mstsim.formulation import BUC, MST, Options, assemble
from mstsim.io import PENETRATIONS, SyntheticCaseSpec, generate_case
from mstsim.model import GeneratorCluster, PlantClass


def _plant(**kw):
    return GeneratorCluster("g", "N", PlantClass.SYN_THERMAL, units=2, p_max=90.0, **kw)


def test_full_rate_ocgt_ramp_is_clipped():
    excl, report = clip_plan([_plant(ramp_up=90.0, ramp_down=90.0)], dt=1.0, T=24)
    assert ("g", RAMP_UP) in excl and ("g", RAMP_DOWN) in excl
    assert report.clipped[RAMP_UP] == 24


def test_coal_min_up_is_kept():
    excl, report = clip_plan([_plant(min_up=8, min_down=6)], dt=1.0, T=24)
    assert ("g", MIN_UP) not in excl and ("g", MIN_DOWN) not in excl
    assert report.emitted[MIN_UP] == 24


def test_rule_follows_equation_qualifier():
    # r*dt just below rated power still binds
    assert ramp_binding(89.9, 90.0, 1.0)
    assert not ramp_binding(90.0, 90.0, 1.0)
    assert not ramp_binding(45.0, 90.0, 2.0)
    assert not ramp_binding(None, 90.0, 1.0)


def test_unlimited_ramp_is_not_counted():
    _, report = clip_plan([_plant()], dt=1.0, T=5)
    assert report.clipped[RAMP_UP] == report.emitted[RAMP_UP] == 0


@pytest.mark.parametrize("variant", [MST, BUC])
def test_counts_add_up_to_unclipped_model(variant):
    case = random_micro_case(7, T=6)
    on = assemble(case, variant=variant)
    off = assemble(case, variant=variant, options=Options(clipping=False))
    rep = on.model.meta["clipping"]
    assert rep["total_without"] == off.model.n_rows
    assert rep["total_with"] == on.model.n_rows
    assert rep["total_without"] - rep["total_with"] == sum(rep["clipped"].values())


def test_res_heavy_case_reports_reduction():
    b = generate_case(SyntheticCaseSpec(penetration=0.75, T=24))
    rep = assemble(b.case, b.init).model.meta["clipping"]
    assert rep["reduction_pct"] > 0


def _fast_share(plants, dt):
    syn = [g for g in plants if g.synchronous]
    fast = [g for g in syn if not ramp_binding(g.ramp_up, g.p_max, dt) or g.min_up == 1]
    return len(fast) / len(syn)


def test_clipped_fraction_grows_with_fast_share():
    shares, fracs = [], []
    for pen in PENETRATIONS:
        b = generate_case(SyntheticCaseSpec(penetration=pen, T=24))
        rep = assemble(b.case, b.init).model.meta["clipping"]
        clipped, emitted = sum(rep["clipped"].values()), sum(rep["emitted"].values())
        shares.append(_fast_share(b.case.plants, b.case.dt))
        fracs.append(clipped / (clipped + emitted))
    assert all(b >= a for a, b in zip(shares, shares[1:])), shares
    assert all(b >= a - 1e-12 for a, b in zip(fracs, fracs[1:])), fracs
    assert fracs[-1] > fracs[0]
