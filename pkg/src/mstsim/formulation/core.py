"""Unit-commitment MILP assembly for the clustered (MST), per-unit (BUC) and
aggregated (AGG) variants.

All three share one skeleton. Each synchronous plant is split into commitment
*blocks*: a block of ``count`` interchangeable units whose per-unit limits, ramps,
costs and inertia are multiplied by ``scale``.

    MST  one block per plant, count = U, scale = 1   (integer s, u, d)
    BUC  U blocks per plant, count = 1, scale = 1    (binary s, u, d per unit)
    AGG  one block per plant, count = 1, scale = U   (binary s, u, d per plant)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ..clipping import MIN_DOWN, MIN_UP, RAMP_DOWN, RAMP_UP, clip_plan
from ..milp import MilpModel, Sense, VarKind
from ..model import Case, InitialState, PlantClass, default_initial_state


class FormulationVariant(str, Enum):
    MST = "mst"
    BUC = "buc"
    AGG = "agg"


class IslandWithoutReference(ValueError):
    pass


@dataclass(frozen=True)
class Options:
    clipping: bool = True
    prosumer_mode: str = "presolve"  # or "kkt"
    losses: bool = False
    symmetry_breaking: bool = False  # BUC only; valid for identical unit histories

    def __post_init__(self):
        if self.prosumer_mode not in ("presolve", "kkt"):
            raise ValueError(f"unknown prosumer mode {self.prosumer_mode!r}")


@dataclass(frozen=True)
class Block:
    plant: str
    key: str
    count: int
    scale: float
    # initial state of this block
    s0: int
    p0: float
    up0: tuple[int, ...]
    down0: tuple[int, ...]


def plant_blocks(g, variant: FormulationVariant, init: InitialState) -> list[Block]:
    """Split plant ``g`` into commitment blocks and distribute its initial state."""
    s_hat = init.s.get(g.id, 0)
    p_hat = init.p.get(g.id, 0.0)
    up = tuple(init.up_hist.get(g.id, ()))
    down = tuple(init.down_hist.get(g.id, ()))
    if variant is FormulationVariant.MST:
        return [Block(g.id, g.id, g.units, 1.0, s_hat, p_hat, up, down)]
    if variant is FormulationVariant.AGG:
        on = 1 if s_hat > 0 else 0
        return [Block(g.id, g.id, 1, float(g.units), on, p_hat,
                      tuple(int(k > 0) for k in up),
                      tuple(int(k > 0) if not on else 0 for k in down))]
    unit_p = init.unit_p.get(g.id)
    blocks = []
    for i in range(g.units):
        on = i < s_hat
        if unit_p is not None:
            p0 = float(unit_p[i])
        else:
            p0 = p_hat / s_hat if on else 0.0
        up_i = tuple(int(on and i < k) for k in up)
        down_i = tuple(int((not on) and (i - s_hat) < k) for k in down)
        blocks.append(Block(g.id, f"{g.id}#{i}", 1, 1.0, int(on), p0, up_i, down_i))
    return blocks


class VariableIndex:
    """Maps ``(entity, quantity, slot)`` to a model variable id."""

    def __init__(self, model: MilpModel):
        self.model = model
        self._ids: dict[tuple, int] = {}

    def add(self, entity: str, quantity: str, t: int, lb: float, ub: float,
            kind: VarKind = VarKind.CONTINUOUS, group: str = "") -> int:
        key = (entity, quantity, t)
        if key in self._ids:
            raise KeyError(f"variable {key} already indexed")
        vid = self.model.add_var(f"{quantity}[{entity},{t}]", lb, ub, kind, group or quantity)
        self._ids[key] = vid
        return vid

    def __getitem__(self, key) -> int:
        return self._ids[key]

    def get(self, key, default=None):
        return self._ids.get(key, default)

    def __contains__(self, key) -> bool:
        return key in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def keys(self):
        return self._ids.keys()

    def series(self, entity: str, quantity: str, T: int) -> list[int]:
        return [self._ids[(entity, quantity, t)] for t in range(T)]


@dataclass
class Context:
    case: Case
    init: InitialState
    variant: FormulationVariant
    options: Options
    model: MilpModel
    index: VariableIndex
    blocks: dict[str, list[Block]]
    exclusions: set = field(default_factory=set)
    prosumer_fixed: dict = field(default_factory=dict)  # presolve outputs
    prosumer_lp: dict = field(default_factory=dict)  # KKT bookkeeping
    references: dict[str, str] = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.case.T

    @property
    def dt(self) -> float:
        return self.case.dt

    def region_plants(self, region: str, synchronous_only: bool = True):
        nr = self.case.network.node_region
        return [g for g in self.case.plants
                if nr[g.node] == region and (g.synchronous or not synchronous_only)]


def commitment_kind(variant: FormulationVariant) -> VarKind:
    return VarKind.INTEGER if variant is FormulationVariant.MST else VarKind.BINARY


# -- variables ------------------------------------------------------------

def _declare_variables(ctx: Context):
    case, idx, T = ctx.case, ctx.index, ctx.T
    kind = commitment_kind(ctx.variant)
    for g in case.plants:
        if g.synchronous:
            for b in ctx.blocks[g.id]:
                for t in range(T):
                    idx.add(b.key, "s", t, 0, b.count, kind, "commitment")
                    idx.add(b.key, "u", t, 0, b.count, kind, "commitment")
                    idx.add(b.key, "d", t, 0, b.count, kind, "commitment")
                    idx.add(b.key, "p", t, 0, b.count * b.scale * g.p_max, group="dispatch")
            if g.is_cst:
                cap = g.units * g.p_max
                m_lb = min(0.0, g.tes_min / ctx.dt) - cap
                for t in range(T):
                    idx.add(g.id, "tes", t, g.tes_min, g.tes_max, group="soc")
                    idx.add(g.id, "m", t, m_lb, cap, group="reserve_aux")
        else:
            avail = case.scenario.res_avail[g.id]
            for t in range(T):
                hi = float(avail[t])
                idx.add(g.id, "p", t, min(g.p_min, hi), hi, group="dispatch")
    net = case.network
    span = max(1, len(net.nodes)) * net.angle_bound
    for line in net.ac_lines:
        for t in range(T):
            idx.add(line.id, "flow", t, -line.limit, line.limit, group="flow")
            if ctx.options.losses and line.loss_factor > 0:
                idx.add(line.id, "flow+", t, 0, line.limit, group="flow_split")
                idx.add(line.id, "flow-", t, 0, line.limit, group="flow_split")
    for line in net.hvdc_lines:
        for t in range(T):
            idx.add(line.id, "flow", t, -line.limit, line.limit, group="flow")
    refs = set(ctx.references.values())
    for n in net.nodes:
        for t in range(T):
            if n in refs:
                idx.add(n, "angle", t, 0.0, 0.0, group="angle")
            else:
                idx.add(n, "angle", t, -span, span, group="angle")
    for s in case.storage:
        for t in range(T):
            idx.add(s.id, "p", t, s.p_discharge, s.p_charge, group="storage_power")
            idx.add(s.id, "soc", t, s.e_min, s.e_max, group="soc")


def _block_p(ctx: Context, g, t: int) -> list[int]:
    if not g.synchronous:
        return [ctx.index[(g.id, "p", t)]]
    return [ctx.index[(b.key, "p", t)] for b in ctx.blocks[g.id]]


# -- emitters -------------------------------------------------------------

def emit_objective(ctx: Context):
    """Fixed, startup, shutdown and energy cost over all plants and slots."""
    m, idx, dt = ctx.model, ctx.index, ctx.dt
    for g in ctx.case.plants:
        for t in range(ctx.T):
            if g.synchronous:
                for b in ctx.blocks[g.id]:
                    m.add_objective(idx[(b.key, "s", t)], g.c_fix * b.scale)
                    m.add_objective(idx[(b.key, "u", t)], g.c_su * b.scale)
                    m.add_objective(idx[(b.key, "d", t)], g.c_sd * b.scale)
                    m.add_objective(idx[(b.key, "p", t)], g.c_var * dt)
            else:
                m.add_constant(g.c_fix)  # RES status is fixed at one
                m.add_objective(idx[(g.id, "p", t)], g.c_var * dt)


def emit_power_balance(ctx: Context):
    case, idx, m = ctx.case, ctx.index, ctx.model
    net, sc = case.network, case.scenario
    by_node: dict[str, dict] = {n: {"gen": [], "sto": [], "pro": []} for n in net.nodes}
    for g in case.plants:
        by_node[g.node]["gen"].append(g)
    for s in case.storage:
        by_node[s.node]["sto"].append(s)
    for p in case.prosumers:
        by_node[p.node]["pro"].append(p)
    loads = {n: sc.node_load(n) for n in net.nodes}
    for t in range(ctx.T):
        for n in net.nodes:
            row: list[tuple[int, float]] = []
            rhs = float(loads[n][t])
            for g in by_node[n]["gen"]:
                row += [(v, 1.0) for v in _block_p(ctx, g, t)]
            for s in by_node[n]["sto"]:
                row.append((idx[(s.id, "p", t)], -1.0))
            for p in by_node[n]["pro"]:
                if ctx.options.prosumer_mode == "kkt":
                    row.append((idx[(p.id, "grid_in", t)], -1.0))
                    row.append((idx[(p.id, "grid_out", t)], 1.0))
                else:
                    fixed = ctx.prosumer_fixed[p.id]
                    rhs += float(fixed["grid_in"][t] - fixed["grid_out"][t])
            for line in net.lines:
                if n not in (line.from_node, line.to_node):
                    continue
                sign = 1.0 if line.from_node == n else -1.0
                row.append((idx[(line.id, "flow", t)], -sign))
                if (line.id, "flow+", t) in idx:
                    half = 0.5 * line.loss_factor
                    row.append((idx[(line.id, "flow+", t)], -half))
                    row.append((idx[(line.id, "flow-", t)], -half))
            m.add_row(row, Sense.EQ, rhs, f"balance[{n},{t}]", "balance")
    for line in net.ac_lines:
        for t in range(ctx.T):
            if (line.id, "flow+", t) in idx:
                m.add_row([(idx[(line.id, "flow", t)], 1.0), (idx[(line.id, "flow+", t)], -1.0),
                           (idx[(line.id, "flow-", t)], 1.0)],
                          Sense.EQ, 0.0, f"loss_split[{line.id},{t}]", "loss_split")


def emit_reserves(ctx: Context):
    """Regional spinning reserve; CST headroom is min(capacity, TES) via aux ``m``."""
    case, idx, m, dt = ctx.case, ctx.index, ctx.model, ctx.dt
    net, sc = case.network, case.scenario
    for g in case.plants:
        if not g.is_cst:
            continue
        for t in range(ctx.T):
            head = [(idx[(g.id, "m", t)], 1.0)]
            tes = [(idx[(g.id, "m", t)], 1.0), (idx[(g.id, "tes", t)], -1.0 / dt)]
            for b in ctx.blocks[g.id]:
                head += [(idx[(b.key, "s", t)], -g.p_max * b.scale), (idx[(b.key, "p", t)], 1.0)]
                tes.append((idx[(b.key, "p", t)], 1.0))
            m.add_row(head, Sense.LE, 0.0, f"reserve_cap[{g.id},{t}]", "reserve_cst")
            m.add_row(tes, Sense.LE, 0.0, f"reserve_tes[{g.id},{t}]", "reserve_cst")
    for r in net.regions:
        plants = ctx.region_plants(r)
        nodes = net.region_nodes(r)
        for t in range(ctx.T):
            rhs = float(sum(sc.reserve[n][t] for n in nodes if n in sc.reserve))
            if not plants and rhs <= 0:
                continue
            row = []
            for g in plants:
                if g.is_cst:
                    row.append((idx[(g.id, "m", t)], 1.0))
                    continue
                for b in ctx.blocks[g.id]:
                    row += [(idx[(b.key, "s", t)], g.p_max * b.scale), (idx[(b.key, "p", t)], -1.0)]
            m.add_row(row, Sense.GE, rhs, f"reserve[{r},{t}]", "reserve")


def emit_inertia(ctx: Context):
    case, idx, m = ctx.case, ctx.index, ctx.model
    net, sc = case.network, case.scenario
    for r in net.regions:
        plants = ctx.region_plants(r)
        nodes = net.region_nodes(r)
        for t in range(ctx.T):
            rhs = float(sum(sc.inertia[n][t] for n in nodes if n in sc.inertia))
            if rhs <= 0:
                continue  # vacuous
            row = [(idx[(b.key, "s", t)], g.inertia_per_unit * b.scale)
                   for g in plants for b in ctx.blocks[g.id]]
            m.add_row(row, Sense.GE, rhs, f"inertia[{r},{t}]", "inertia")


def assign_references(network) -> dict[str, str]:
    """One angle reference per synchronous AC island (island root -> reference node)."""
    refs = {}
    for island in network.ac_islands():
        if network.reference_nodes:
            chosen = [n for n in island if n in network.reference_nodes]
            if len(chosen) != 1:
                raise IslandWithoutReference(
                    f"AC island {island} has {len(chosen)} reference nodes, needs exactly 1")
            refs[island[0]] = chosen[0]
        else:
            refs[island[0]] = island[0]
    return refs


def emit_dc_flow(ctx: Context):
    """DC flow equation and angle-difference limits for AC lines only."""
    idx, m = ctx.index, ctx.model
    bound = ctx.case.network.angle_bound
    for line in ctx.case.network.ac_lines:
        for t in range(ctx.T):
            dx, dy = idx[(line.from_node, "angle", t)], idx[(line.to_node, "angle", t)]
            m.add_row([(idx[(line.id, "flow", t)], 1.0), (dx, -line.susceptance),
                       (dy, line.susceptance)], Sense.EQ, 0.0,
                      f"dc_flow[{line.id},{t}]", "dc_flow")
            m.add_row([(dx, 1.0), (dy, -1.0)], Sense.LE, bound,
                      f"angle_max[{line.id},{t}]", "angle_limit")
            m.add_row([(dx, 1.0), (dy, -1.0)], Sense.GE, -bound,
                      f"angle_min[{line.id},{t}]", "angle_limit")


def emit_thermal_limits(ctx: Context):
    """Line limits live in the flow variable bounds; this re-asserts them."""
    for line in ctx.case.network.lines:
        for t in range(ctx.T):
            v = ctx.index[(line.id, "flow", t)]
            ctx.model.set_bounds(v, -line.limit, line.limit)


def emit_generation_limits(ctx: Context):
    idx, m = ctx.index, ctx.model
    for g in ctx.case.syn_plants:
        for b in ctx.blocks[g.id]:
            for t in range(ctx.T):
                s, p = idx[(b.key, "s", t)], idx[(b.key, "p", t)]
                m.add_row([(p, 1.0), (s, -g.p_max * b.scale)], Sense.LE, 0.0,
                          f"gen_max[{b.key},{t}]", "gen_limits")
                if g.p_min > 0:
                    m.add_row([(p, 1.0), (s, -g.p_min * b.scale)], Sense.GE, 0.0,
                              f"gen_min[{b.key},{t}]", "gen_limits")


def emit_commitment_logic(ctx: Context):
    idx, m = ctx.index, ctx.model
    for g in ctx.case.syn_plants:
        for b in ctx.blocks[g.id]:
            for t in range(ctx.T):
                row = [(idx[(b.key, "u", t)], 1.0), (idx[(b.key, "d", t)], -1.0),
                       (idx[(b.key, "s", t)], -1.0)]
                if t == 0:
                    rhs = -float(b.s0)
                else:
                    row.append((idx[(b.key, "s", t - 1)], 1.0))
                    rhs = 0.0
                m.add_row(row, Sense.EQ, rhs, f"logic[{b.key},{t}]", "logic")
                # started units are online now, stopped units were online before
                u, d, s = idx[(b.key, "u", t)], idx[(b.key, "d", t)], idx[(b.key, "s", t)]
                m.add_row([(u, 1.0), (s, -1.0)], Sense.LE, 0.0,
                          f"startup_online[{b.key},{t}]", "switch_bounds")
                if t == 0:
                    m.add_row([(d, 1.0)], Sense.LE, float(b.s0),
                              f"shutdown_online[{b.key},{t}]", "switch_bounds")
                else:
                    m.add_row([(d, 1.0), (idx[(b.key, "s", t - 1)], -1.0)], Sense.LE, 0.0,
                              f"shutdown_online[{b.key},{t}]", "switch_bounds")
        if ctx.options.symmetry_breaking and ctx.variant is FormulationVariant.BUC:
            blocks = ctx.blocks[g.id]
            for a, c in zip(blocks, blocks[1:]):
                for t in range(ctx.T):
                    m.add_row([(idx[(a.key, "s", t)], 1.0), (idx[(c.key, "s", t)], -1.0)],
                              Sense.GE, 0.0, f"symmetry[{a.key},{t}]", "symmetry")


def emit_ramps(ctx: Context):
    idx, m, dt = ctx.index, ctx.model, ctx.dt
    for g in ctx.case.syn_plants:
        up = (g.id, RAMP_UP) not in ctx.exclusions and g.ramp_up is not None
        down = (g.id, RAMP_DOWN) not in ctx.exclusions and g.ramp_down is not None
        for b in ctx.blocks[g.id]:
            for t in range(ctx.T):
                p, s = idx[(b.key, "p", t)], idx[(b.key, "s", t)]
                if up:
                    step = g.ramp_up * dt * b.scale
                    row = [(p, 1.0), (s, -step)]
                    if t == 0:
                        rhs = b.p0
                    else:
                        row.append((idx[(b.key, "p", t - 1)], -1.0))
                        rhs = 0.0
                    m.add_row(row, Sense.LE, rhs, f"ramp_up[{b.key},{t}]", RAMP_UP)
                if down:
                    step = g.ramp_down * dt * b.scale
                    if t == 0:
                        m.add_row([(p, -1.0)], Sense.LE, b.s0 * step - b.p0,
                                  f"ramp_down[{b.key},{t}]", RAMP_DOWN)
                    else:
                        m.add_row([(idx[(b.key, "p", t - 1)], 1.0), (p, -1.0),
                                   (idx[(b.key, "s", t - 1)], -step)], Sense.LE, 0.0,
                                  f"ramp_down[{b.key},{t}]", RAMP_DOWN)


def emit_mudt(ctx: Context):
    idx, m = ctx.index, ctx.model
    for g in ctx.case.syn_plants:
        for b in ctx.blocks[g.id]:
            if (g.id, MIN_UP) not in ctx.exclusions:
                tau = g.min_up
                for t in range(ctx.T):
                    first = max(0, t - tau + 1)
                    row = [(idx[(b.key, "s", t)], 1.0)]
                    row += [(idx[(b.key, "u", j)], -1.0) for j in range(first, t + 1)]
                    # slot t is offset t+1 from the horizon start
                    carry = b.up0[t] if t < len(b.up0) and t + 1 < tau else 0
                    m.add_row(row, Sense.GE, float(carry), f"min_up[{b.key},{t}]", MIN_UP)
            if (g.id, MIN_DOWN) not in ctx.exclusions:
                tau = g.min_down
                for t in range(ctx.T):
                    first = max(0, t - tau + 1)
                    row = [(idx[(b.key, "s", t)], 1.0)]
                    row += [(idx[(b.key, "d", j)], 1.0) for j in range(first, t + 1)]
                    carry = b.down0[t] if t < len(b.down0) and t + 1 < tau else 0
                    m.add_row(row, Sense.LE, float(b.count - carry),
                              f"min_down[{b.key},{t}]", MIN_DOWN)


def emit_cst(ctx: Context):
    idx, m, dt = ctx.index, ctx.model, ctx.dt
    sc = ctx.case.scenario
    for g in ctx.case.plants:
        if not g.is_cst:
            continue
        e0 = ctx.init.tes.get(g.id, g.tes_min)
        capture = sc.cst_capture[g.id]
        for t in range(ctx.T):
            row = [(idx[(g.id, "tes", t)], 1.0)]
            row += [(v, dt) for v in _block_p(ctx, g, t)]
            if t == 0:
                rhs = float(capture[t]) + g.tes_eff * e0
            else:
                row.append((idx[(g.id, "tes", t - 1)], -g.tes_eff))
                rhs = float(capture[t])
            m.add_row(row, Sense.EQ, rhs, f"tes_balance[{g.id},{t}]", "tes")


def emit_storage(ctx: Context):
    idx, m, dt = ctx.index, ctx.model, ctx.dt
    for s in ctx.case.storage:
        e0 = ctx.init.storage.get(s.id, s.e_min)
        for t in range(ctx.T):
            row = [(idx[(s.id, "soc", t)], 1.0), (idx[(s.id, "p", t)], -dt)]
            if t == 0:
                rhs = s.efficiency * e0
            else:
                row.append((idx[(s.id, "soc", t - 1)], -s.efficiency))
                rhs = 0.0
            m.add_row(row, Sense.EQ, rhs, f"storage[{s.id},{t}]", "storage")


def assemble(case: Case, init: Optional[InitialState] = None,
             variant: FormulationVariant = FormulationVariant.MST,
             options: Options = Options()) -> Context:
    """Build the full MILP; the returned context holds the model and variable index."""
    from .prosumer import emit_prosumer_kkt, presolve_prosumers

    variant = FormulationVariant(variant)
    if init is None:
        init = default_initial_state(case.plants, case.storage, case.prosumers)
    blocks = {g.id: plant_blocks(g, variant, init) for g in case.plants if g.synchronous}
    model = MilpModel(f"{variant.value}")
    ctx = Context(case, init, variant, options, model, VariableIndex(model), blocks,
                  references=assign_references(case.network))
    n_blocks = {gid: len(bs) for gid, bs in blocks.items()}
    exclusions, report = clip_plan(case.plants, case.dt, case.T, n_blocks)
    if options.clipping:
        ctx.exclusions = exclusions

    _declare_variables(ctx)
    if options.prosumer_mode == "presolve":
        ctx.prosumer_fixed = presolve_prosumers(case.prosumers, case.scenario, init)
    else:
        emit_prosumer_kkt(ctx)
    emit_objective(ctx)
    emit_power_balance(ctx)
    emit_reserves(ctx)
    emit_inertia(ctx)
    emit_dc_flow(ctx)
    emit_thermal_limits(ctx)
    emit_generation_limits(ctx)
    emit_commitment_logic(ctx)
    emit_ramps(ctx)
    emit_mudt(ctx)
    emit_cst(ctx)
    emit_storage(ctx)

    if not options.clipping:
        # nothing was excluded: every would-be row is emitted
        for grp in report.clipped:
            report.emitted[grp] += report.clipped[grp]
            report.clipped[grp] = 0
    report.total_with = model.n_rows
    report.total_without = model.n_rows + report.clipped_total
    model.meta = {
        "variant": variant.value,
        "options": {"clipping": options.clipping, "prosumer_mode": options.prosumer_mode,
                    "losses": options.losses, "symmetry_breaking": options.symmetry_breaking},
        "counts": model.counts(),
        "commitment_variables": model.counts()["variables_by_group"].get("commitment", 0),
        "clipping": report.to_dict(),
    }
    model.seal()
    return ctx


def commitment_variable_count(case: Case, variant: FormulationVariant) -> int:
    """3 status variables per commitment block per slot."""
    variant = FormulationVariant(variant)
    per_slot = sum(g.units if variant is FormulationVariant.BUC else 1
                   for g in case.plants if g.synchronous)
    return 3 * per_slot * case.T
