"""Dispatch results, their extraction from a solved model, and domain-level audits.

The audits here re-derive every physical relation from the case data, not from
the MILP rows, so they are independent of the formulation code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .formulation.core import Block, Context, FormulationVariant, plant_blocks
from .milp import SolveResult, row_violations
from .model import Case, InitialState, PlantClass

TOL = 1e-6


class InfeasibleDispatch(RuntimeError):
    """A sub-problem had no feasible solution."""

    def __init__(self, message, window: Optional[int] = None, status=None):
        super().__init__(message)
        self.window = window
        self.status = status


class AuditFailure(AssertionError):
    pass


@dataclass
class DispatchResult:
    variant: FormulationVariant
    T: int
    dt: float
    plants: dict[str, dict[str, np.ndarray]]  # plant -> s/u/d/p (plant totals)
    flows: dict[str, np.ndarray] = field(default_factory=dict)
    angles: dict[str, np.ndarray] = field(default_factory=dict)
    losses: dict[str, np.ndarray] = field(default_factory=dict)
    storage: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)  # p/soc
    tes: dict[str, np.ndarray] = field(default_factory=dict)
    reserve_aux: dict[str, np.ndarray] = field(default_factory=dict)
    prosumers: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    units: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)  # per-unit (BUC)
    objective: float = float("nan")
    solver_objective: float = float("nan")
    solves: list[dict] = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    clipping: dict = field(default_factory=dict)
    plan: dict = field(default_factory=dict)
    initial: Optional[InitialState] = None
    meta: dict = field(default_factory=dict)

    @property
    def wall_time(self) -> float:
        return float(sum(s.get("wall_time", 0.0) for s in self.solves))

    @property
    def gap(self) -> float:
        gaps = [s.get("gap", 0.0) for s in self.solves]
        return float(max(gaps)) if gaps else float("nan")

    def online_units(self) -> np.ndarray:
        total = np.zeros(self.T)
        for series in self.plants.values():
            if "s" in series:
                total = total + series["s"]
        return total


def _vals(x, ids):
    return np.array([x[i] for i in ids], dtype=float)


def extract(ctx: Context, res: SolveResult) -> DispatchResult:
    """Map a solver result onto plant/line/device series and run both audits."""
    case, idx, T = ctx.case, ctx.index, ctx.T
    x = lift_reserve_aux(ctx, res.x)
    plants, units = {}, {}
    for g in case.plants:
        if g.synchronous:
            tot = {q: np.zeros(T) for q in "sudp"}
            per_unit = {q: [] for q in "sudp"}
            for b in ctx.blocks[g.id]:
                for q in "sudp":
                    v = _vals(x, idx.series(b.key, q, T))
                    if q != "p":
                        v = np.round(v)
                        v = v * b.scale  # AGG reports online units, not the binary
                    tot[q] += v
                    per_unit[q].append(v)
            plants[g.id] = tot
            if ctx.variant is FormulationVariant.BUC:
                units[g.id] = {q: np.vstack(per_unit[q]) for q in "sudp"}
        else:
            plants[g.id] = {"p": _vals(x, idx.series(g.id, "p", T))}
    net = case.network
    flows = {l.id: _vals(x, idx.series(l.id, "flow", T)) for l in net.lines}
    angles = {n: _vals(x, idx.series(n, "angle", T)) for n in net.nodes}
    losses = {}
    for l in net.ac_lines:
        if (l.id, "flow+", 0) in idx:
            both = _vals(x, idx.series(l.id, "flow+", T)) + _vals(x, idx.series(l.id, "flow-", T))
            losses[l.id] = l.loss_factor * both
    storage = {s.id: {"p": _vals(x, idx.series(s.id, "p", T)),
                      "soc": _vals(x, idx.series(s.id, "soc", T))} for s in case.storage}
    tes = {g.id: _vals(x, idx.series(g.id, "tes", T)) for g in case.plants if g.is_cst}
    aux = {g.id: _vals(x, idx.series(g.id, "m", T)) for g in case.plants if g.is_cst}
    prosumers = {}
    for p in case.prosumers:
        if ctx.options.prosumer_mode == "kkt":
            prosumers[p.id] = {q: _vals(x, idx.series(p.id, q, T))
                               for q in ("grid_in", "grid_out", "battery", "soc")}
        else:
            prosumers[p.id] = {q: np.array(v) for q, v in ctx.prosumer_fixed[p.id].items()}
    result = DispatchResult(
        variant=ctx.variant, T=T, dt=ctx.dt, plants=plants, flows=flows, angles=angles,
        losses=losses, storage=storage, tes=tes, reserve_aux=aux, prosumers=prosumers,
        units=units, solver_objective=res.objective, solves=[res.stats()],
        counts=ctx.model.meta.get("counts", {}), clipping=ctx.model.meta.get("clipping", {}),
        initial=ctx.init,
        meta={"options": ctx.model.meta.get("options", {})},
    )
    result.objective = dispatch_cost(result, case)
    rows = row_violations(ctx.model, x, TOL)
    if rows:
        raise AuditFailure("model rows violated: " + "; ".join(rows[:5]))
    problems = audit_dispatch(result, case, ctx.init)
    if problems:
        raise AuditFailure("dispatch audit failed: " + "; ".join(problems[:5]))
    if abs(result.objective - res.objective) > TOL * max(1.0, abs(res.objective)):
        raise AuditFailure(f"objective {res.objective} != recomputed {result.objective}")
    return result


def lift_reserve_aux(ctx: Context, x: np.ndarray) -> np.ndarray:
    """Raise each CST reserve auxiliary to ``min(p_max s - p, e/dt - p)``.

    The auxiliary carries no cost and only appears in its two upper-bound rows
    and, positively, in the regional reserve row, so the lifted point stays
    feasible with the same objective.
    """
    x = np.array(x, dtype=float)
    for g in ctx.case.plants:
        if not g.is_cst:
            continue
        for t in range(ctx.T):
            blocks = ctx.blocks[g.id]
            p = sum(x[ctx.index[(b.key, "p", t)]] for b in blocks)
            s = sum(x[ctx.index[(b.key, "s", t)]] * b.scale for b in blocks)
            e = x[ctx.index[(g.id, "tes", t)]]
            j = ctx.index[(g.id, "m", t)]
            x[j] = min(g.p_max * s - p, e / ctx.dt - p)
    return x


def dispatch_cost(result: DispatchResult, case: Case) -> float:
    """Recompute total generation cost from the dispatch series."""
    total = 0.0
    for g in case.plants:
        series = result.plants[g.id]
        total += g.c_var * result.dt * float(np.sum(series["p"]))
        if g.synchronous:
            total += g.c_fix * float(np.sum(series["s"]))
            total += g.c_su * float(np.sum(series["u"])) + g.c_sd * float(np.sum(series["d"]))
        else:
            total += g.c_fix * result.T
    return total


def cst_headroom(g, s: np.ndarray, p: np.ndarray, tes: np.ndarray, dt: float) -> np.ndarray:
    return np.minimum(g.p_max * s - p, tes / dt - p)


def audit_dispatch(result: DispatchResult, case: Case, init: Optional[InitialState] = None,
                   tol: float = TOL) -> list[str]:
    """Single-slot physics: balance, flows, limits, inertia, reserves, logic, SOC chains."""
    bad = []
    net, sc = case.network, case.scenario
    T, dt = result.T, result.dt

    def check(cond, msg):
        if not cond:
            bad.append(msg)

    for n in net.nodes:
        lhs = np.zeros(T)
        rhs = sc.node_load(n).copy()
        for g in case.plants:
            if g.node == n:
                lhs += result.plants[g.id]["p"]
        for s in case.storage:
            if s.node == n:
                rhs += result.storage[s.id]["p"]
        for p in case.prosumers:
            if p.node == n:
                rhs += result.prosumers[p.id]["grid_in"] - result.prosumers[p.id]["grid_out"]
        for l in net.lines:
            if n == l.from_node:
                rhs += result.flows[l.id]
            elif n == l.to_node:
                rhs -= result.flows[l.id]
            if n in (l.from_node, l.to_node) and l.id in result.losses:
                rhs += 0.5 * result.losses[l.id]
        resid = np.max(np.abs(lhs - rhs))
        check(resid <= tol, f"balance at {n}: residual {resid:.3g} MW")
    for l in net.ac_lines:
        diff = result.angles[l.from_node] - result.angles[l.to_node]
        err = np.max(np.abs(result.flows[l.id] - l.susceptance * diff))
        check(err <= tol, f"DC flow on {l.id}: error {err:.3g}")
        check(np.max(np.abs(diff)) <= net.angle_bound + tol, f"angle limit on {l.id}")
    for l in net.lines:
        check(np.max(np.abs(result.flows[l.id])) <= l.limit + tol, f"thermal limit on {l.id}")

    for g in case.plants:
        series = result.plants[g.id]
        p = series["p"]
        if not g.synchronous:
            avail = sc.res_avail[g.id]
            check(np.all(p <= avail + tol) and np.all(p >= -tol), f"RES limits on {g.id}")
            continue
        s, u, d = series["s"], series["u"], series["d"]
        check(np.all(s >= 0) and np.all(s <= g.units), f"unit count bound on {g.id}")
        check(np.all(p <= g.p_max * s + tol), f"max generation on {g.id}")
        check(np.all(p >= g.p_min * s - tol), f"min generation on {g.id}")
        s_prev = np.concatenate([[init.s.get(g.id, 0) if init else 0], s[:-1]])
        check(np.array_equal(u - d, s - s_prev), f"on/off logic on {g.id}")
        if g.is_cst:
            e = result.tes[g.id]
            e0 = init.tes.get(g.id, g.tes_min) if init else g.tes_min
            prev = np.concatenate([[e0], e[:-1]])
            err = np.max(np.abs(e - (g.tes_eff * prev + sc.cst_capture[g.id] - p * dt)))
            check(err <= tol, f"TES balance on {g.id}: error {err:.3g}")
            check(np.all(e >= g.tes_min - tol) and np.all(e <= g.tes_max + tol),
                  f"TES limits on {g.id}")
            head = cst_headroom(g, s, p, e, dt)
            check(np.all(result.reserve_aux[g.id] <= head + tol), f"reserve aux above min on {g.id}")
            check(np.all(result.reserve_aux[g.id] >= head - tol), f"reserve aux below min on {g.id}")

    for r in net.regions:
        nodes = set(net.region_nodes(r))
        need_h = sum((sc.inertia[n] for n in nodes if n in sc.inertia), np.zeros(T))
        need_r = sum((sc.reserve[n] for n in nodes if n in sc.reserve), np.zeros(T))
        have_h, have_r = np.zeros(T), np.zeros(T)
        for g in case.plants:
            if not g.synchronous or g.node not in nodes:
                continue
            series = result.plants[g.id]
            have_h += series["s"] * g.inertia_per_unit
            if g.is_cst:
                have_r += cst_headroom(g, series["s"], series["p"], result.tes[g.id], dt)
            else:
                have_r += g.p_max * series["s"] - series["p"]
        check(np.all(have_h >= need_h - tol), f"inertia requirement in {r}")
        check(np.all(have_r >= need_r - tol), f"reserve requirement in {r}")

    for s in case.storage:
        st = result.storage[s.id]
        e0 = init.storage.get(s.id, s.e_min) if init else s.e_min
        prev = np.concatenate([[e0], st["soc"][:-1]])
        err = np.max(np.abs(st["soc"] - (s.efficiency * prev + st["p"] * dt)))
        check(err <= tol, f"storage balance on {s.id}: error {err:.3g}")
        check(np.all(st["p"] >= s.p_discharge - tol) and np.all(st["p"] <= s.p_charge + tol),
              f"storage power limits on {s.id}")
        check(np.all(st["soc"] >= s.e_min - tol) and np.all(st["soc"] <= s.e_max + tol),
              f"storage energy limits on {s.id}")
    for p in case.prosumers:
        pr = result.prosumers[p.id]
        err = np.max(np.abs(pr["grid_in"] + sc.prosumer_pv[p.id]
                            - pr["grid_out"] - sc.prosumer_load[p.id] - pr["battery"]))
        check(err <= tol, f"prosumer balance on {p.id}: error {err:.3g}")
    return bad


def _series_blocks(result: DispatchResult, g, init: InitialState):
    """Yield ``(block, s, u, d, p)`` in the commitment granularity of the variant."""
    blocks = plant_blocks(g, result.variant, init)
    series = result.plants[g.id]
    if result.variant is FormulationVariant.BUC:
        un = result.units[g.id]
        for i, b in enumerate(blocks):
            yield b, un["s"][i], un["u"][i], un["d"][i], un["p"][i]
    else:
        b = blocks[0]
        k = b.scale
        yield b, series["s"] / k, series["u"] / k, series["d"] / k, series["p"]


def audit_time_coupling(result: DispatchResult, case: Case, init: InitialState,
                        tol: float = TOL) -> list[str]:
    """Re-evaluate logic, ramp and minimum up/down rows over the whole series."""
    bad = []
    dt = result.dt
    for g in case.syn_plants:
        for b, s, u, d, p in _series_blocks(result, g, init):
            s_prev = np.concatenate([[b.s0], s[:-1]])
            p_prev = np.concatenate([[b.p0], p[:-1]])
            if not np.allclose(u - d, s - s_prev, atol=tol):
                bad.append(f"logic violated on {b.key}")
            if g.ramp_up is not None:
                excess = p - p_prev - s * g.ramp_up * dt * b.scale
                if np.max(excess) > tol:
                    bad.append(f"ramp-up violated on {b.key} at {int(np.argmax(excess))}")
            if g.ramp_down is not None:
                excess = p_prev - p - s_prev * g.ramp_down * dt * b.scale
                if np.max(excess) > tol:
                    bad.append(f"ramp-down violated on {b.key} at {int(np.argmax(excess))}")
            for t in range(result.T):
                if g.min_up > 1:
                    first = max(0, t - g.min_up + 1)
                    need = u[first:t + 1].sum()
                    if t + 1 < g.min_up and t < len(b.up0):
                        need += b.up0[t]
                    if s[t] < need - tol:
                        bad.append(f"min-up violated on {b.key} at {t}")
                if g.min_down > 1:
                    first = max(0, t - g.min_down + 1)
                    off = d[first:t + 1].sum()
                    if t + 1 < g.min_down and t < len(b.down0):
                        off += b.down0[t]
                    if s[t] > b.count - off + tol:
                        bad.append(f"min-down violated on {b.key} at {t}")
    return bad
