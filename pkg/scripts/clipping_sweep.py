"""How many ramp and MUDT rows clipping removes as RES penetration grows."""

import argparse

from mstsim.formulation import MST, Options, assemble
from mstsim.io import SyntheticCaseSpec, generate_case
from mstsim.io.synthetic import PENETRATIONS

ap = argparse.ArgumentParser()
ap.add_argument("--T", type=int, default=24)
ap.add_argument("--dt", type=float, default=1.0)
a = ap.parse_args()

print(f"{'penetration':>11} {'rows':>8} {'clipped':>8} {'reduction %':>12}")
for pen in PENETRATIONS:
    b = generate_case(SyntheticCaseSpec(penetration=pen, T=a.T, dt=a.dt))
    m = assemble(b.case, b.init, MST, Options(clipping=True)).model
    clip = m.meta["clipping"]
    print(f"{pen:>11} {m.meta['counts']['constraints']:>8} {sum(clip['clipped'].values()):>8} "
          f"{clip['reduction_pct']:>12.2f}")
