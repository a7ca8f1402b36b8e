"""Domain data for the market simulation: network, plants, storage, prosumers, traces.

Units: power MW, energy MWh, inertia MW*s (H in s times rating in MVA), time in
slots of ``dt`` hours. Every value object is a frozen dataclass; trace arrays are
made read-only on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np


class PlantClass(str, Enum):
    SYN_THERMAL = "syn_thermal"
    SYN_CST = "syn_cst"
    RES = "res"

    @property
    def synchronous(self) -> bool:
        return self is not PlantClass.RES


@dataclass(frozen=True)
class ACLine:
    id: str
    from_node: str
    to_node: str
    susceptance: float  # MW per rad
    limit: float  # MW
    loss_factor: float = 0.0


@dataclass(frozen=True)
class HVDCLine:
    id: str
    from_node: str
    to_node: str
    limit: float


@dataclass(frozen=True)
class NetworkModel:
    nodes: tuple[str, ...]
    regions: tuple[str, ...]
    node_region: dict[str, str]
    ac_lines: tuple[ACLine, ...] = ()
    hvdc_lines: tuple[HVDCLine, ...] = ()
    angle_bound: float = math.pi / 6
    # one per synchronous AC island; chosen automatically when empty
    reference_nodes: tuple[str, ...] = ()

    @property
    def lines(self) -> tuple:
        return self.ac_lines + self.hvdc_lines

    def region_nodes(self, region: str) -> list[str]:
        return [n for n in self.nodes if self.node_region.get(n) == region]

    def ac_islands(self) -> list[list[str]]:
        """Connected components of the AC graph, in node declaration order."""
        parent = {n: n for n in self.nodes}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        for line in self.ac_lines:
            a, b = find(line.from_node), find(line.to_node)
            if a != b:
                parent[max(a, b, key=self.nodes.index)] = min(a, b, key=self.nodes.index)
        groups: dict[str, list[str]] = {}
        for n in self.nodes:
            groups.setdefault(find(n), []).append(n)
        return list(groups.values())


@dataclass(frozen=True)
class GeneratorCluster:
    """A plant of ``units`` identical units. Limits, ramps and costs are per unit."""

    id: str
    node: str
    kind: PlantClass
    units: int = 1
    p_min: float = 0.0
    p_max: float = 0.0
    ramp_up: Optional[float] = None  # MW per slot per unit; None = unlimited
    ramp_down: Optional[float] = None
    min_up: int = 1  # slots
    min_down: int = 1
    c_fix: float = 0.0  # $ per online unit per slot
    c_su: float = 0.0  # $ per startup
    c_sd: float = 0.0
    c_var: float = 0.0  # $/MWh
    inertia_h: float = 0.0  # s
    rating: float = 0.0  # MVA
    tes_eff: float = 1.0
    tes_min: float = 0.0  # MWh_th
    tes_max: float = 0.0
    tech: str = ""

    @property
    def synchronous(self) -> bool:
        return self.kind.synchronous

    @property
    def is_cst(self) -> bool:
        return self.kind is PlantClass.SYN_CST

    @property
    def inertia_per_unit(self) -> float:
        return self.inertia_h * self.rating


@dataclass(frozen=True)
class StoragePlant:
    id: str
    node: str
    efficiency: float = 1.0  # carry-over per slot
    e_min: float = 0.0
    e_max: float = 0.0
    p_discharge: float = 0.0  # <= 0
    p_charge: float = 0.0  # >= 0


@dataclass(frozen=True)
class ProsumerAggregate:
    id: str
    node: str
    efficiency: float = 1.0
    e_min: float = 0.0
    e_max: float = 0.0
    p_discharge: float = 0.0  # <= 0
    p_charge: float = 0.0  # >= 0
    feed_in_ratio: float = 0.0


@dataclass(frozen=True)
class Consumer:
    id: str
    node: str


def _frozen(traces) -> dict[str, np.ndarray]:
    out = {}
    for key, values in dict(traces).items():
        arr = np.array(values, dtype=float)
        arr.setflags(write=False)
        out[key] = arr
    return out


@dataclass(frozen=True)
class Scenario:
    """Time-indexed traces for one horizon of ``T`` slots."""

    T: int
    dt: float = 1.0
    consumers: tuple[Consumer, ...] = ()
    consumer_load: dict[str, np.ndarray] = field(default_factory=dict)
    res_avail: dict[str, np.ndarray] = field(default_factory=dict)
    cst_capture: dict[str, np.ndarray] = field(default_factory=dict)  # MWh_th per slot
    reserve: dict[str, np.ndarray] = field(default_factory=dict)  # per node
    inertia: dict[str, np.ndarray] = field(default_factory=dict)  # per node, MW*s
    prosumer_load: dict[str, np.ndarray] = field(default_factory=dict)
    prosumer_pv: dict[str, np.ndarray] = field(default_factory=dict)

    _TRACE_FIELDS = (
        "consumer_load", "res_avail", "cst_capture", "reserve", "inertia",
        "prosumer_load", "prosumer_pv",
    )

    def __post_init__(self):
        for name in self._TRACE_FIELDS:
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def traces(self):
        """Yield ``(field, key, array)`` for every trace."""
        for name in self._TRACE_FIELDS:
            for key, arr in getattr(self, name).items():
                yield name, key, arr

    def window(self, start: int, stop: int) -> "Scenario":
        kw = {name: {k: v[start:stop] for k, v in getattr(self, name).items()}
              for name in self._TRACE_FIELDS}
        return replace(self, T=stop - start, **kw)

    def node_load(self, node: str) -> np.ndarray:
        total = np.zeros(self.T)
        for c in self.consumers:
            if c.node == node:
                total = total + self.consumer_load[c.id]
        return total

    def total_load(self) -> np.ndarray:
        total = np.zeros(self.T)
        for c in self.consumers:
            total = total + self.consumer_load[c.id]
        return total


@dataclass(frozen=True)
class InitialState:
    """Plant and device state at the start of a horizon.

    ``up_hist[g][k-1]`` is the number of units of ``g`` that must stay online
    at slot ``k`` (``k = 1 .. min_up-1``); ``down_hist`` likewise for offline.
    ``unit_p`` optionally carries per-unit dispatch for the per-unit variant,
    ordered online units first.
    """

    s: dict[str, int] = field(default_factory=dict)
    p: dict[str, float] = field(default_factory=dict)
    up_hist: dict[str, tuple[int, ...]] = field(default_factory=dict)
    down_hist: dict[str, tuple[int, ...]] = field(default_factory=dict)
    tes: dict[str, float] = field(default_factory=dict)
    storage: dict[str, float] = field(default_factory=dict)
    battery: dict[str, float] = field(default_factory=dict)
    unit_p: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def up(self, plant: str, k: int) -> int:
        hist = self.up_hist.get(plant, ())
        return hist[k - 1] if 1 <= k <= len(hist) else 0

    def down(self, plant: str, k: int) -> int:
        hist = self.down_hist.get(plant, ())
        return hist[k - 1] if 1 <= k <= len(hist) else 0


@dataclass(frozen=True)
class Case:
    network: NetworkModel
    plants: tuple[GeneratorCluster, ...]
    scenario: Scenario
    storage: tuple[StoragePlant, ...] = ()
    prosumers: tuple[ProsumerAggregate, ...] = ()

    @property
    def T(self) -> int:
        return self.scenario.T

    @property
    def dt(self) -> float:
        return self.scenario.dt

    def plant(self, pid: str) -> GeneratorCluster:
        for g in self.plants:
            if g.id == pid:
                return g
        raise KeyError(pid)

    @property
    def syn_plants(self) -> list[GeneratorCluster]:
        return [g for g in self.plants if g.synchronous]

    def window(self, start: int, stop: int) -> "Case":
        return replace(self, scenario=self.scenario.window(start, stop))


@dataclass(frozen=True)
class Violation:
    entity: str
    message: str

    def __str__(self):
        return f"{self.entity}: {self.message}"


def validate(network: NetworkModel, plants, storage=(), prosumers=(),
             scenario: Optional[Scenario] = None,
             init: Optional[InitialState] = None) -> list[Violation]:
    """Check every invariant and cross-reference; an empty list means valid."""
    out: list[Violation] = []

    def bad(entity, msg):
        out.append(Violation(entity, msg))

    nodes = set(network.nodes)
    if len(nodes) != len(network.nodes):
        bad("network", "duplicate node ids")
    for n in network.nodes:
        if network.node_region.get(n) not in network.regions:
            bad(n, "node is not mapped to a declared region")
    for n in network.node_region:
        if n not in nodes:
            bad(n, "region map references an undeclared node")
    if not 0 < network.angle_bound <= math.pi / 2:
        bad("network", "angle_bound must lie in (0, pi/2]")
    line_ids = [l.id for l in network.lines]
    if len(set(line_ids)) != len(line_ids):
        bad("network", "duplicate line ids")
    for line in network.ac_lines:
        for end in (line.from_node, line.to_node):
            if end not in nodes:
                bad(line.id, f"endpoint {end!r} is not a declared node")
        if not line.susceptance > 0:
            bad(line.id, "susceptance must be positive")
        if not line.limit >= 0:
            bad(line.id, "thermal limit must be nonnegative")
        if not 0 <= line.loss_factor < 1:
            bad(line.id, "loss factor must lie in [0, 1)")
    for line in network.hvdc_lines:
        for end in (line.from_node, line.to_node):
            if end not in nodes:
                bad(line.id, f"endpoint {end!r} is not a declared node")
        if not line.limit >= 0:
            bad(line.id, "limit must be nonnegative")
    if network.reference_nodes:
        for island in network.ac_islands():
            refs = [n for n in island if n in network.reference_nodes]
            if len(refs) != 1:
                bad("network", f"island {island} needs exactly one reference node")

    ids = [g.id for g in plants] + [s.id for s in storage] + [p.id for p in prosumers]
    if len(set(ids)) != len(ids):
        bad("plants", "duplicate device ids")

    for g in plants:
        if g.node not in nodes:
            bad(g.id, f"node {g.node!r} is not declared")
        if not 0 <= g.p_min <= g.p_max:
            bad(g.id, f"requires 0 <= p_min <= p_max (got {g.p_min}, {g.p_max})")
        if g.units < 1:
            bad(g.id, "unit count must be >= 1")
        if g.min_up < 1 or g.min_down < 1:
            bad(g.id, "minimum up/down times must be >= 1 slot")
        if g.inertia_h < 0 or g.rating < 0:
            bad(g.id, "inertia and rating must be nonnegative")
        for r in (g.ramp_up, g.ramp_down):
            if r is not None and r < 0:
                bad(g.id, "ramp rates must be nonnegative")
        if g.kind is PlantClass.RES:
            if g.units != 1:
                bad(g.id, "RES must be aggregated into a single unit")
            if g.min_up != 1 or g.min_down != 1 or g.c_su or g.c_sd:
                bad(g.id, "RES carries no MUDT or startup/shutdown costs")
        if g.kind is PlantClass.SYN_CST:
            if not g.tes_min <= g.tes_max:
                bad(g.id, "TES bounds require e_min <= e_max")
            if not 0 < g.tes_eff <= 1:
                bad(g.id, "TES efficiency must lie in (0, 1]")

    for s in storage:
        if s.node not in nodes:
            bad(s.id, f"node {s.node!r} is not declared")
        if not s.e_min <= s.e_max:
            bad(s.id, "energy bounds require e_min <= e_max")
        if not s.p_discharge <= 0 <= s.p_charge:
            bad(s.id, "requires discharge limit <= 0 <= charge limit")
        if not 0 < s.efficiency <= 1:
            bad(s.id, "efficiency must lie in (0, 1]")

    for p in prosumers:
        if p.node not in nodes:
            bad(p.id, f"node {p.node!r} is not declared")
        if not p.e_min <= p.e_max:
            bad(p.id, "battery bounds require e_min <= e_max")
        if not p.p_discharge <= 0 <= p.p_charge:
            bad(p.id, "requires discharge limit <= 0 <= charge limit")
        if not 0 < p.efficiency <= 1:
            bad(p.id, "efficiency must lie in (0, 1]")
        if not 0 <= p.feed_in_ratio <= 1:
            bad(p.id, "feed-in ratio must lie in [0, 1]")

    if scenario is not None:
        out.extend(_validate_scenario(network, plants, prosumers, scenario))
    if init is not None:
        out.extend(_validate_init(plants, init))
    return out


def _validate_scenario(network, plants, prosumers, sc: Scenario) -> list[Violation]:
    out = []
    if sc.T < 1:
        out.append(Violation("scenario", "T must be >= 1"))
    if not sc.dt > 0:
        out.append(Violation("scenario", "dt must be positive"))
    nodes = set(network.nodes)
    consumers = {c.id for c in sc.consumers}
    for c in sc.consumers:
        if c.node not in nodes:
            out.append(Violation(c.id, f"node {c.node!r} is not declared"))
        if c.id not in sc.consumer_load:
            out.append(Violation(c.id, "missing load trace"))
    by_id = {g.id: g for g in plants}
    for g in plants:
        if g.kind is PlantClass.RES and g.id not in sc.res_avail:
            out.append(Violation(g.id, "missing RES availability trace"))
        if g.kind is PlantClass.SYN_CST and g.id not in sc.cst_capture:
            out.append(Violation(g.id, "missing CST capture trace"))
    pro_ids = {p.id for p in prosumers}
    for p in prosumers:
        if p.id not in sc.prosumer_load or p.id not in sc.prosumer_pv:
            out.append(Violation(p.id, "missing prosumer load/PV trace"))
    owners = {
        "consumer_load": consumers,
        "res_avail": {k for k, g in by_id.items() if g.kind is PlantClass.RES},
        "cst_capture": {k for k, g in by_id.items() if g.kind is PlantClass.SYN_CST},
        "reserve": nodes, "inertia": nodes,
        "prosumer_load": pro_ids, "prosumer_pv": pro_ids,
    }
    for name, key, arr in sc.traces():
        label = f"{name}[{key}]"
        if key not in owners[name]:
            out.append(Violation(label, "trace references an undeclared entity"))
        if arr.shape != (sc.T,):
            out.append(Violation(label, f"trace length {arr.size} != T={sc.T}"))
        elif not np.all(np.isfinite(arr)) or np.any(arr < 0):
            out.append(Violation(label, "trace values must be finite and nonnegative"))
    return out


def _validate_init(plants, init: InitialState) -> list[Violation]:
    out = []
    for g in plants:
        if not g.synchronous:
            continue
        s = init.s.get(g.id, 0)
        p = init.p.get(g.id, 0.0)
        if not 0 <= s <= g.units:
            out.append(Violation(g.id, f"initial online units {s} outside [0, {g.units}]"))
        tol = 1e-6 * max(1.0, g.p_max * g.units)
        if s > 0 and not (g.p_min * s - tol <= p <= g.p_max * s + tol):
            out.append(Violation(g.id, "initial dispatch outside online limits"))
        if s == 0 and abs(p) > tol:
            out.append(Violation(g.id, "initial dispatch must be 0 with no units online"))
        for k in init.up_hist.get(g.id, ()):
            if not 0 <= k <= s:
                out.append(Violation(g.id, "up-history entries must lie in [0, s_hat]"))
        for k in init.down_hist.get(g.id, ()):
            if not 0 <= k <= g.units - s:
                out.append(Violation(g.id, "down-history entries must lie in [0, U - s_hat]"))
        if g.kind is PlantClass.SYN_CST and g.id in init.tes:
            e = init.tes[g.id]
            if not g.tes_min - 1e-9 <= e <= g.tes_max + 1e-9:
                out.append(Violation(g.id, f"initial TES {e} outside [{g.tes_min}, {g.tes_max}]"))
    return out


def validate_case(case: Case, init: Optional[InitialState] = None) -> list[Violation]:
    return validate(case.network, case.plants, case.storage, case.prosumers,
                    case.scenario, init)


def default_initial_state(plants, storage=(), prosumers=()) -> InitialState:
    """All units offline, no histories, every store at its lower bound."""
    return InitialState(
        s={g.id: 0 for g in plants if g.synchronous},
        p={g.id: 0.0 for g in plants if g.synchronous},
        tes={g.id: g.tes_min for g in plants if g.kind is PlantClass.SYN_CST},
        storage={s.id: s.e_min for s in storage},
        battery={p.id: p.e_min for p in prosumers},
    )
