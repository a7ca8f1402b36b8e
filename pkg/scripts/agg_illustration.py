"""Three-unit plant at 0.8, 1.2 and 1.6 pu demand: what each variant commits."""

from mstsim.fixtures import agg_illustration_case
from mstsim.formulation import AGG, BUC, MST
from mstsim.metrics import inertia_timeseries
from mstsim.rolling import solve_case

print(f"{'demand pu':>9} {'variant':>7} {'online':>6} {'inertia MW*s':>13} {'cost':>10}")
for pu in (0.8, 1.2, 1.6):
    case = agg_illustration_case(pu)
    for v in (MST, BUC, AGG):
        res = solve_case(case, v, gap=0.0)
        h = inertia_timeseries(res, case.network, case.plants)["R"][0]
        print(f"{pu:>9} {v.value:>7} {res.online_units()[0]:>6g} {h:>13g} {res.objective:>10.1f}")
