"""Seeded four-region synthetic test systems.

Four regions of five nodes each (ring inside a region, AC ties between
neighbouring regions, one HVDC link), fourteen multi-unit synchronous plants
and one wind and one PV cluster per region once RES is present. The thermal
fleet at zero penetration keeps the proportions 2.31 GW hydro, 39.35 GW coal
and 5.16 GW gas; higher penetrations retire coal for gas, CST and storage.

Load shape per region (hour ``h`` of the horizon, ``d`` its day)::

    x(h) = 0.62 + 0.16 exp(-((h mod 24) - 8)^2 / 8) + 0.22 exp(-((h mod 24) - 18.5)^2 / 10)
           - 0.12 exp(-((h mod 24) - 3.5)^2 / 12)
    w(d) = 0.92 on days 5 and 6 of each week, else 1
    load(h) = peak * share_r * x(h) * w(d) * (1 + 0.015 n_h) / max(...)

with ``n_h`` standard normal noise drawn from the case seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..model import (ACLine, Case, Consumer, GeneratorCluster, HVDCLine, InitialState,
                     NetworkModel, PlantClass, Scenario, StoragePlant)

PENETRATIONS = (0.0, 0.30, 0.50, 0.75)

# (tech, region, units, p_max MW) for the zero-penetration fleet
_FLEET_RES0 = (
    ("hydro", 1, 6, 250.0), ("hydro", 2, 3, 270.0),
    ("coal", 0, 8, 700.0), ("coal", 0, 8, 660.0), ("coal", 0, 6, 720.0),
    ("coal", 1, 6, 680.0), ("coal", 1, 6, 560.0), ("coal", 1, 8, 498.75),
    ("coal", 2, 6, 700.0), ("coal", 2, 6, 650.0), ("coal", 2, 6, 770.0),
    ("ccgt", 0, 6, 300.0), ("ccgt", 3, 6, 260.0), ("ocgt", 3, 20, 90.0),
)

# coal plants retired per penetration, as indices into the rows above; spread over
# regions so every region keeps firm capacity plus tie capacity above its net peak
_RETIRE = {0.0: (), 0.30: (3, 9), 0.50: (3, 9, 10), 0.75: (3, 4, 9, 10)}
_REPLACE = {
    0.30: (("ccgt", 1, 6, 350.0), ("ocgt", 2, 12, 100.0)),
    0.50: (("ccgt", 1, 6, 350.0), ("ocgt", 2, 12, 100.0), ("cst", 3, 8, 100.0)),
    0.75: (("ccgt", 1, 6, 350.0), ("ocgt", 2, 12, 100.0), ("cst", 3, 8, 100.0),
           ("cst", 0, 8, 100.0)),
}

# per-tech technical and cost data: p_min frac, ramp frac of p_max per hour (None =
# unlimited), min up, min down, c_fix $/unit/h, c_su $, c_sd $, c_var $/MWh, H s
_TECH = {
    "coal": (0.40, 0.45, 8, 6, 1800.0, 40000.0, 5000.0, 22.0, 4.0),
    "ccgt": (0.45, 0.50, 4, 3, 900.0, 12000.0, 1500.0, 62.0, 5.0),
    "ocgt": (0.20, None, 1, 1, 150.0, 1500.0, 0.0, 135.0, 3.0),
    "hydro": (0.10, None, 1, 1, 50.0, 200.0, 0.0, 80.0, 3.0),
    "cst": (0.30, 0.50, 2, 2, 300.0, 3000.0, 500.0, 5.0, 5.0),
}

_REGION_SHARE = (0.30, 0.40, 0.22, 0.08)
_WIND_SHARE = 0.6  # share of RES energy from wind


@dataclass(frozen=True)
class SyntheticCaseSpec:
    penetration: float = 0.0
    regions: int = 4
    nodes_per_region: int = 5
    T: int = 168
    dt: float = 1.0
    peak_load_mw: float = 36500.0
    reserve_fraction: float = 0.10
    inertia_s: float = 1.0  # nodal inertia requirement per MW of load
    storage_hours: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.penetration < 1:
            raise ValueError("penetration must lie in [0, 1)")
        if self.regions != 4:
            raise ValueError("the synthetic template has exactly 4 regions")
        if self.nodes_per_region < 3:
            raise ValueError("need at least 3 nodes per region")

    def to_dict(self) -> dict:
        return asdict(self)


def _fleet(pen: float):
    """Plant rows for the nearest tabulated penetration at or below ``pen``."""
    key = max(p for p in PENETRATIONS if p <= pen + 1e-12)
    rows = list(_FLEET_RES0)
    drop = set(_RETIRE[key])
    rows = [r for i, r in enumerate(rows) if i not in drop]
    return rows + list(_REPLACE.get(key, ())), key


def _network(spec: SyntheticCaseSpec, rng) -> NetworkModel:
    regions = tuple(f"R{r + 1}" for r in range(spec.regions))
    nodes, node_region, lines = [], {}, []
    k = spec.nodes_per_region
    for r, reg in enumerate(regions):
        ids = [f"{reg}N{i + 1}" for i in range(k)]
        nodes += ids
        node_region.update({n: reg for n in ids})
        scale = spec.peak_load_mw * _REGION_SHARE[r]
        for i in range(k):
            a, b = ids[i], ids[(i + 1) % k]
            lines.append(ACLine(f"{a}-{b}", a, b, float(np.round(rng.uniform(4e3, 9e3))),
                                float(np.round(0.6 * scale + 1500))))
        chord = (ids[0], ids[k // 2])
        lines.append(ACLine(f"{chord[0]}-{chord[1]}", *chord,
                            float(np.round(rng.uniform(3e3, 6e3))), float(np.round(0.4 * scale + 1000))))
    for r in range(spec.regions - 1):
        a, b = f"{regions[r]}N{k}", f"{regions[r + 1]}N1"
        lines.append(ACLine(f"{a}-{b}", a, b, float(np.round(rng.uniform(2e3, 4e3))), 2500.0))
    hv = HVDCLine(f"{regions[1]}N3-{regions[3]}N3", f"{regions[1]}N3", f"{regions[3]}N3", 800.0)
    return NetworkModel(tuple(nodes), regions, node_region, tuple(lines), (hv,))


def _load_shape(T: int, dt: float, rng) -> np.ndarray:
    h = np.arange(T) * dt
    hod = h % 24
    x = (0.62 + 0.16 * np.exp(-(hod - 8) ** 2 / 8) + 0.22 * np.exp(-(hod - 18.5) ** 2 / 10)
         - 0.12 * np.exp(-(hod - 3.5) ** 2 / 12))
    day = (h // 24).astype(int) % 7
    w = np.where((day == 5) | (day == 6), 0.92, 1.0)
    return x * w * (1 + 0.015 * rng.standard_normal(T))


def _solar(T: int, dt: float, rng) -> np.ndarray:
    hod = (np.arange(T) * dt) % 24
    clear = np.clip(np.sin(np.pi * (hod - 6) / 12), 0, None)
    days = int(math.ceil(T * dt / 24)) + 1
    cloud = rng.uniform(0.55, 1.0, days)[(np.arange(T) * dt // 24).astype(int)]
    return clear * cloud


def _wind(T: int, rng) -> np.ndarray:
    z = np.zeros(T)
    e = rng.standard_normal(T)
    for t in range(T):
        z[t] = (0.93 * z[t - 1] if t else 0.0) + 0.37 * e[t]
    return 1 / (1 + np.exp(-(z - 0.5)))


def generate_case(spec: SyntheticCaseSpec):
    """Return ``(case, initial_state)``; identical specs give identical outputs."""
    from .bundle import ScenarioBundle

    rng = np.random.default_rng(spec.seed)
    net = _network(spec, rng)
    T, dt = spec.T, spec.dt
    region_nodes = {r: net.region_nodes(r) for r in net.regions}

    consumers, load = [], {}
    for r, reg in enumerate(net.regions):
        shape = _load_shape(T, dt, rng)
        split = rng.dirichlet(np.full(len(region_nodes[reg]), 4.0))
        for n, frac in zip(region_nodes[reg], split):
            cid = f"L_{n}"
            consumers.append(Consumer(cid, n))
            load[cid] = shape * frac * _REGION_SHARE[r]
    total = sum(load.values())
    norm = spec.peak_load_mw / float(np.max(total))
    load = {k: np.round(v * norm, 3) for k, v in load.items()}
    total = sum(load.values())

    rows, _ = _fleet(spec.penetration)
    plants, capture = [], {}
    solar_by_region = {reg: _solar(T, dt, rng) for reg in net.regions}
    for i, (tech, r, units, p_max) in enumerate(rows):
        reg = net.regions[r]
        node = region_nodes[reg][int(rng.integers(len(region_nodes[reg])))]
        pmin_f, ramp_f, mu, md, cfix, csu, csd, cvar, h = _TECH[tech]
        kind = PlantClass.SYN_CST if tech == "cst" else PlantClass.SYN_THERMAL
        gid = f"G{i + 1:02d}_{tech}"
        tes = {}
        if kind is PlantClass.SYN_CST:
            e_max = 8.0 * p_max * units
            tes = dict(tes_eff=0.99, tes_min=0.1 * e_max, tes_max=e_max)
            capture[gid] = np.round(2.2 * p_max * units * dt * solar_by_region[reg], 3)
        plants.append(GeneratorCluster(
            gid, node, kind, units=units, p_min=round(pmin_f * p_max, 3), p_max=p_max,
            ramp_up=None if ramp_f is None else ramp_f * p_max,
            ramp_down=None if ramp_f is None else ramp_f * p_max,
            min_up=max(1, int(round(mu / dt))), min_down=max(1, int(round(md / dt))),
            c_fix=cfix, c_su=csu, c_sd=csd, c_var=cvar, inertia_h=h,
            rating=round(p_max / 0.85, 3), tech=tech, **tes))

    res_avail = {}
    if spec.penetration > 0:
        target = spec.penetration * float(np.sum(total)) * dt
        raw = {}
        for r, reg in enumerate(net.regions):
            nodes = region_nodes[reg]
            raw[f"W_{reg}"] = (nodes[1], _wind(T, rng), _REGION_SHARE[r], "wind")
            raw[f"PV_{reg}"] = (nodes[-1], solar_by_region[reg], _REGION_SHARE[r], "pv")
        for tech, share in (("wind", _WIND_SHARE), ("pv", 1 - _WIND_SHARE)):
            keys = [k for k, v in raw.items() if v[3] == tech]
            weighted = {k: raw[k][1] * raw[k][2] for k in keys}
            energy = sum(float(np.sum(v)) for v in weighted.values()) * dt
            for k in keys:
                avail = np.round(weighted[k] * share * target / energy, 3)
                cap = float(np.max(avail)) if np.max(avail) > 0 else 1.0
                res_avail[k] = avail
                plants.append(GeneratorCluster(k, raw[k][0], PlantClass.RES, p_max=cap, tech=tech))

    storage = []
    if spec.penetration >= 0.5:
        for r, reg in enumerate(net.regions):
            p = float(np.round(0.04 * spec.peak_load_mw * _REGION_SHARE[r]))
            storage.append(StoragePlant(f"S_{reg}", region_nodes[reg][2], efficiency=0.999,
                                        e_min=0.0, e_max=spec.storage_hours * p,
                                        p_discharge=-p, p_charge=p))

    reserve, inertia = {}, {}
    for c in consumers:
        reserve[c.node] = np.round(spec.reserve_fraction * load[c.id], 3)
        inertia[c.node] = np.round(spec.inertia_s * load[c.id], 3)

    scenario = Scenario(T, dt, tuple(consumers), load, res_avail, capture, reserve, inertia)
    case = Case(net, tuple(plants), scenario, tuple(storage))
    init = warm_start(case)
    return ScenarioBundle(case, init, meta={"synthetic": spec.to_dict(),
                                            "name": f"nemlike_pen{int(round(100 * spec.penetration))}"})


def warm_start(case: Case) -> InitialState:
    """Coal online at half load, every store half full, everything else offline."""
    s, p = {}, {}
    for g in case.syn_plants:
        on = g.tech == "coal"
        s[g.id] = g.units if on else 0
        p[g.id] = 0.5 * g.p_max * g.units if on else 0.0
    return InitialState(
        s=s, p=p,
        tes={g.id: 0.5 * (g.tes_min + g.tes_max) for g in case.plants if g.is_cst},
        storage={st.id: 0.5 * (st.e_min + st.e_max) for st in case.storage},
    )
