"""Small hand-built and seeded random cases used by tests, scripts and the bench."""

from __future__ import annotations

import numpy as np

from .model import (ACLine, Case, Consumer, GeneratorCluster, HVDCLine, NetworkModel,
                    PlantClass, ProsumerAggregate, Scenario, StoragePlant)

SYN, CST, RES = PlantClass.SYN_THERMAL, PlantClass.SYN_CST, PlantClass.RES


def two_node_case(T: int = 4, load: float = 100.0) -> Case:
    """Generator at A, load at B, one AC line."""
    net = NetworkModel(("A", "B"), ("R",), {"A": "R", "B": "R"},
                       (ACLine("AB", "A", "B", 500.0, 200.0),))
    g = GeneratorCluster("g", "A", SYN, units=2, p_min=20.0, p_max=100.0,
                         c_fix=10.0, c_su=50.0, c_var=20.0, inertia_h=5.0, rating=100.0)
    sc = Scenario(T, consumers=(Consumer("c", "B"),), consumer_load={"c": np.full(T, load)})
    return Case(net, (g,), sc)


def agg_illustration_case(demand_pu: float, base_mw: float = 100.0) -> Case:
    """One plant of three identical units (0.4-1.0 pu, H = 5 s) serving a single slot."""
    net = NetworkModel(("N",), ("R",), {"N": "R"})
    g = GeneratorCluster("g", "N", SYN, units=3, p_min=0.4 * base_mw, p_max=base_mw,
                         c_fix=100.0, c_su=0.0, c_var=10.0, inertia_h=5.0, rating=base_mw)
    # expensive unlimited backstop so every case stays feasible
    backstop = GeneratorCluster("backstop", "N", RES, p_max=3 * base_mw, c_var=1000.0)
    sc = Scenario(1, consumers=(Consumer("c", "N"),),
                  consumer_load={"c": np.array([demand_pu * base_mw])},
                  res_avail={"backstop": np.array([3 * base_mw])})
    return Case(net, (g, backstop), sc)


def random_micro_case(seed: int, T: int = 12, n_plants: int = 4, max_units: int = 3,
                      storage: bool = True, cst: bool = True, prosumer: bool = False,
                      ramps: bool = True) -> Case:
    """Seeded micro-scenario with binding ramps, MUDT, a CST plant and storage.

    ``n_plants`` counts every plant: ``n_plants - 2`` ramp/MUDT-limited plants
    (the second one CST when ``cst``), a fast peaker without ramp or MUDT limits
    that keeps the case feasible from a cold start, and one wind cluster.
    """
    rng = np.random.default_rng(seed)
    nodes = ("N1", "N2", "N3")
    regions = ("R1", "R2")
    plants = []
    for i in range(n_plants - 2):
        kind = CST if (cst and i == 1) else SYN
        units = int(rng.integers(2, max_units + 1))
        p_max = float(rng.choice([40.0, 60.0, 80.0]))
        p_min = float(np.round(rng.uniform(0.2, 0.5) * p_max))
        ramp = float(np.round(rng.uniform(max(p_min, 0.3 * p_max), 0.8 * p_max)))
        if rng.random() < 0.25:
            ramp_up = p_max  # clipped
        else:
            ramp_up = ramp
        plants.append(GeneratorCluster(
            f"P{i}", nodes[i % len(nodes)], kind, units=units, p_min=p_min, p_max=p_max,
            ramp_up=ramp_up if ramps else None, ramp_down=ramp if ramps else None, min_up=int(rng.integers(1, 4)),
            min_down=int(rng.integers(1, 3)),
            c_fix=float(np.round(rng.uniform(50, 300))), c_su=float(np.round(rng.uniform(100, 800))),
            c_sd=float(np.round(rng.uniform(0, 100))), c_var=float(np.round(rng.uniform(15, 45), 1)),
            inertia_h=float(rng.uniform(2, 6)), rating=p_max * 1.15,
            tes_eff=0.98 if kind is CST else 1.0, tes_min=0.0,
            tes_max=4 * p_max * units if kind is CST else 0.0,
            tech="cst" if kind is CST else "thermal"))
    plants.append(GeneratorCluster(
        "peak", "N3", SYN, units=int(rng.integers(1, max_units + 1)), p_min=0.0, p_max=80.0,
        c_fix=20.0, c_su=40.0, c_var=120.0, inertia_h=2.0, rating=90.0, tech="ocgt"))
    plants.append(GeneratorCluster("wind", "N2", RES, p_max=60.0, tech="wind"))

    firm = sum(g.units * g.p_max for g in plants if g.synchronous and g.id != "peak")
    lim = rng.uniform(0.4, 0.7, 3) * firm
    net = NetworkModel(
        nodes, regions, {"N1": "R1", "N2": "R1", "N3": "R2"},
        (ACLine("L12", "N1", "N2", 800.0, float(np.round(lim[0]))),
         ACLine("L23", "N2", "N3", 600.0, float(np.round(lim[1])))),
        (HVDCLine("H13", "N1", "N3", float(np.round(0.5 * lim[2]))),),
    )
    hours = np.arange(T)
    shape = 0.55 + 0.25 * np.sin(2 * np.pi * (hours - 6) / 24) + 0.05 * rng.standard_normal(T)
    total = np.clip(shape, 0.3, 0.85) * firm
    split = rng.dirichlet(np.ones(2))
    consumers = (Consumer("C1", "N2"), Consumer("C3", "N3"))
    loads = {"C1": np.round(split[0] * total, 2), "C3": np.round(split[1] * total, 2)}
    wind = np.round(60.0 * rng.uniform(0, 1, T), 2)
    traces = dict(
        consumers=consumers, consumer_load=loads, res_avail={"wind": wind},
        reserve={"N2": np.round(0.1 * loads["C1"], 2), "N3": np.round(0.1 * loads["C3"], 2)},
        inertia={"N2": np.round(0.5 * loads["C1"], 2)},
    )
    if cst:
        g = plants[1]
        traces["cst_capture"] = {g.id: np.round(g.p_max * g.units * np.clip(
            np.sin(np.pi * (hours % 24 - 6) / 12), 0, None), 2)}
    stores = ()
    if storage:
        stores = (StoragePlant("S1", "N1", efficiency=0.98, e_min=0.0, e_max=120.0,
                               p_discharge=-40.0, p_charge=40.0),)
    pros = ()
    if prosumer:
        pros = (ProsumerAggregate("PR", "N2", efficiency=1.0, e_min=0.0, e_max=6.0,
                                  p_discharge=-3.0, p_charge=3.0),)
        traces["prosumer_load"] = {"PR": np.round(rng.uniform(2, 5, T), 2)}
        traces["prosumer_pv"] = {"PR": np.round(8 * np.clip(
            np.sin(np.pi * (hours % 24 - 6) / 12), 0, None), 2)}
    return Case(net, tuple(plants), Scenario(T, **traces), stores, pros)
