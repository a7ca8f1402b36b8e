"""Prosumer aggregates: the lower-level self-consumption LP, solved either up front
(demand coupling makes it independent of the commitment problem) or embedded in
the MILP through its KKT conditions with big-M complementarity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..milp import MilpModel, Sense, VarKind

# tie-break weights: prefer stored energy, then less feed-in
SOC_WEIGHT = 1e-2
FEED_IN_WEIGHT = 1e-3

QUANTITIES = ("grid_in", "grid_out", "battery", "soc")


class InfeasibleProsumer(ValueError):
    pass


class UnboundedDual(ValueError):
    pass


@dataclass(frozen=True)
class LowerLevelLP:
    """``min c.x  s.t.  A x = rhs,  lb <= x <= ub`` with x laid out [gp, gm, b, e] per slot."""

    c: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    T: int

    def var(self, quantity: str, t: int) -> int:
        return 4 * t + QUANTITIES.index(quantity)


def lower_level_lp(p, load, pv, e0: float, dt: float) -> LowerLevelLP:
    T = len(load)
    n = 4 * T
    c = np.zeros(n)
    lb, ub = np.zeros(n), np.zeros(n)
    A = np.zeros((2 * T, n))
    rhs = np.zeros(2 * T)
    soc_w = SOC_WEIGHT / max(T, 1)
    for t in range(T):
        gp, gm, b, e = 4 * t, 4 * t + 1, 4 * t + 2, 4 * t + 3
        c[gp] = dt
        c[gm] = dt * (FEED_IN_WEIGHT - p.feed_in_ratio)
        c[e] = -soc_w
        # import never exceeds load plus charging; export never exceeds PV plus discharge
        ub[gp] = max(load[t] + p.p_charge - pv[t], 0.0)
        ub[gm] = max(pv[t] - load[t] - p.p_discharge, 0.0)
        lb[b], ub[b] = p.p_discharge, p.p_charge
        lb[e], ub[e] = p.e_min, p.e_max
        # gp - gm - b = load - pv
        A[2 * t, [gp, gm, b]] = [1.0, -1.0, -1.0]
        rhs[2 * t] = load[t] - pv[t]
        # e_t - eta e_{t-1} - dt b_t = (eta e0 at t=0)
        A[2 * t + 1, e] = 1.0
        A[2 * t + 1, b] = -dt
        if t == 0:
            rhs[1] = p.efficiency * e0
        else:
            A[2 * t + 1, 4 * (t - 1) + 3] = -p.efficiency
    return LowerLevelLP(c, A, rhs, lb, ub, T)


def _as_milp(lp: LowerLevelLP) -> MilpModel:
    m = MilpModel("prosumer")
    for j in range(lp.c.size):
        m.add_var(f"x{j}", lp.lb[j], lp.ub[j])
        m.add_objective(j, lp.c[j])
    for i in range(lp.rhs.size):
        nz = np.flatnonzero(lp.A[i])
        m.add_row([(int(j), lp.A[i, j]) for j in nz], Sense.EQ, lp.rhs[i], f"r{i}")
    return m


def solve_lower_level(lp: LowerLevelLP):
    """Return ``(objective, x, row_duals)`` of the lower-level LP via HiGHS."""
    from ..milp.highs import lp_outcome, new_highs, to_lp

    h = new_highs()
    h.passModel(to_lp(_as_milp(lp).seal(), integrality=False))
    h.run()
    kind, obj, x = lp_outcome(h)
    if kind != "optimal":
        raise InfeasibleProsumer(f"prosumer LP is {kind}")
    return obj, x, np.asarray(h.getSolution().row_dual, dtype=float)


def presolve_prosumers(prosumers, scenario, init=None) -> dict[str, dict[str, np.ndarray]]:
    """Solve every aggregate's lower-level LP; returns per-prosumer series."""
    out = {}
    for p in prosumers:
        e0 = init.battery.get(p.id, p.e_min) if init is not None else p.e_min
        lp = lower_level_lp(p, scenario.prosumer_load[p.id], scenario.prosumer_pv[p.id],
                            e0, scenario.dt)
        try:
            _, x, _ = solve_lower_level(lp)
        except InfeasibleProsumer as exc:
            raise InfeasibleProsumer(f"{p.id}: {exc}") from None
        out[p.id] = {q: np.array([x[lp.var(q, t)] for t in range(lp.T)]) for q in QUANTITIES}
    return out


def dual_bound(lp: LowerLevelLP, dt: float, eta_min: float) -> float:
    """Bound on equality-row duals.

    A unit of energy injected anywhere can be absorbed by grid exchange within
    the horizon; carrying it through the battery chain amplifies the marginal
    value by at most ``1/eta_min`` per slot and ``1/dt`` for the power/energy
    conversion.
    """
    cmax = float(np.max(np.abs(lp.c))) if lp.c.size else 1.0
    chain = min(eta_min ** -lp.T, 1e6)
    return 10.0 * max(cmax, 1.0) * (lp.T + 1) * max(1.0, 1.0 / dt) * chain


def emit_prosumer_kkt(ctx):
    """Primal feasibility, stationarity, dual feasibility and linearised complementarity."""
    m: MilpModel = ctx.model
    idx = ctx.index
    sc = ctx.case.scenario
    dt = ctx.dt
    for p in ctx.case.prosumers:
        e0 = ctx.init.battery.get(p.id, p.e_min)
        lp = lower_level_lp(p, sc.prosumer_load[p.id], sc.prosumer_pv[p.id], e0, dt)
        T, n = lp.T, lp.c.size
        M_y = dual_bound(lp, dt, p.efficiency)
        col_norm = np.abs(lp.A).sum(axis=0)
        x = []
        for t in range(T):
            for q in QUANTITIES:
                j = lp.var(q, t)
                x.append(idx.add(p.id, q, t, lp.lb[j], lp.ub[j], group="prosumer"))
        y = [idx.add(p.id, f"dual{i % 2}", i // 2, -M_y, M_y, group="prosumer_dual")
             for i in range(lp.rhs.size)]
        # primal feasibility
        for i in range(lp.rhs.size):
            nz = np.flatnonzero(lp.A[i])
            m.add_row([(x[j], lp.A[i, j]) for j in nz], Sense.EQ, lp.rhs[i],
                      f"ll_primal[{p.id},{i}]", "prosumer_primal")
        for j in range(n):
            t, q = divmod(j, 4)
            name = f"{p.id},{QUANTITIES[q]},{t}"
            M_mu = abs(lp.c[j]) + col_norm[j] * M_y
            width = lp.ub[j] - lp.lb[j]
            mu_lo = idx.add(p.id, f"mu_lo_{QUANTITIES[q]}", t, 0.0, M_mu, group="prosumer_dual")
            mu_hi = idx.add(p.id, f"mu_hi_{QUANTITIES[q]}", t, 0.0, M_mu, group="prosumer_dual")
            # stationarity: c_j - A_j^T y - mu_lo + mu_hi = 0
            nz = np.flatnonzero(lp.A[:, j])
            row = [(y[i], -lp.A[i, j]) for i in nz] + [(mu_lo, -1.0), (mu_hi, 1.0)]
            m.add_row(row, Sense.EQ, -lp.c[j], f"ll_stat[{name}]", "prosumer_stationarity")
            if width <= 0:
                continue  # fixed variable: both multipliers free within bounds
            z_lo = idx.add(p.id, f"z_lo_{QUANTITIES[q]}", t, 0, 1, VarKind.BINARY, "prosumer_indicator")
            z_hi = idx.add(p.id, f"z_hi_{QUANTITIES[q]}", t, 0, 1, VarKind.BINARY, "prosumer_indicator")
            # mu_lo > 0 only at the lower bound, mu_hi > 0 only at the upper bound
            m.add_row([(mu_lo, 1.0), (z_lo, -M_mu)], Sense.LE, 0.0,
                      f"ll_cs_dual_lo[{name}]", "prosumer_complementarity")
            m.add_row([(x[j], 1.0), (z_lo, width)], Sense.LE, lp.ub[j],
                      f"ll_cs_primal_lo[{name}]", "prosumer_complementarity")
            m.add_row([(mu_hi, 1.0), (z_hi, -M_mu)], Sense.LE, 0.0,
                      f"ll_cs_dual_hi[{name}]", "prosumer_complementarity")
            m.add_row([(x[j], -1.0), (z_hi, width)], Sense.LE, -lp.lb[j],
                      f"ll_cs_primal_hi[{name}]", "prosumer_complementarity")
            m.add_row([(z_lo, 1.0), (z_hi, 1.0)], Sense.LE, 1.0,
                      f"ll_cs_pair[{name}]", "prosumer_complementarity")
        # the big-M derivation must admit the actual lower-level duals
        _, _, duals = solve_lower_level(lp)
        if np.max(np.abs(duals), initial=0.0) > M_y:
            raise UnboundedDual(f"{p.id}: lower-level duals exceed derived bound {M_y:g}")
        ctx.prosumer_lp[p.id] = lp
