"""Rolling-horizon solves: overlapping windows, state threading and stitching.

Slots are 0-based and ranges half-open internally; ``HorizonPlan.describe``
prints the 1-based inclusive form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .formulation.core import FormulationVariant, Options, assemble, plant_blocks
from .milp import DEFAULT_GAP, solve
from .model import Case, InitialState, default_initial_state
from .results import (AuditFailure, DispatchResult, InfeasibleDispatch, audit_dispatch,
                      audit_time_coupling, dispatch_cost, extract)


class InvalidPlan(ValueError):
    pass


class MissingSlot(IndexError):
    pass


@dataclass(frozen=True)
class Window:
    solve_start: int
    solve_stop: int
    commit_start: int
    commit_stop: int


@dataclass(frozen=True)
class HorizonPlan:
    T: int
    W: int
    C: int
    windows: tuple[Window, ...]

    @property
    def overlap(self) -> int:
        return self.W - self.C

    def describe(self) -> list[str]:
        return [f"solve [{w.solve_start + 1}..{w.solve_stop}] commit "
                f"[{w.commit_start + 1}..{w.commit_stop}]" for w in self.windows]

    def to_dict(self) -> dict:
        return {"T": self.T, "W": self.W, "C": self.C,
                "windows": [[w.solve_start, w.solve_stop, w.commit_start, w.commit_stop]
                            for w in self.windows]}


def plan(T: int, W: int, C: int) -> HorizonPlan:
    """Windows of ``W`` slots advancing by ``C``; the last window commits through ``T``."""
    if not (1 <= C <= W <= T):
        raise InvalidPlan(f"need 1 <= C <= W <= T, got T={T}, W={W}, C={C}")
    windows = []
    start = 0
    while True:
        stop = min(start + W, T)
        if stop == T:
            windows.append(Window(start, T, start, T))
            break
        windows.append(Window(start, stop, start, start + C))
        start += C
    return HorizonPlan(T, W, C, tuple(windows))


DEFAULT_WINDOW_H, DEFAULT_COMMIT_H = 72.0, 48.0


def default_plan(T: int, dt: float = 1.0) -> HorizonPlan:
    """Three-day windows committing two days, cut down to fit short horizons."""
    W = min(T, max(1, int(round(DEFAULT_WINDOW_H / dt))))
    C = min(W, max(1, int(round(DEFAULT_COMMIT_H / dt))))
    return plan(T, W, C)


def _history(events: np.ndarray, t_star: int, tau: int, old_hist) -> tuple[int, ...]:
    """Units that must hold their state at offsets ``1 .. tau-1`` after ``t_star``.

    A unit switched at slot ``j`` holds through ``j + tau - 1``, so offset ``k``
    counts switches in ``[t_star + k - tau + 1, t_star]``. Switches before the
    window start come from the window's own initial history at offset
    ``t_star + k + 1``.
    """
    out = []
    for k in range(1, tau):
        first = t_star + k - tau + 1
        n = float(np.sum(events[max(first, 0):t_star + 1]))
        k_old = t_star + k + 1
        if first < 0 and k_old <= len(old_hist):
            n += old_hist[k_old - 1]
        out.append(int(round(n)))
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def carry_state(result: DispatchResult, case: Case, t_star: int):
    """Initial state for a window starting right after local slot ``t_star``.

    Returns ``(state, perm)``: ``perm[g][i]`` is the index in ``result`` of the
    unit that becomes unit ``i`` of the next window (per-unit variant only;
    online units first, longest remaining up/down requirement first).
    """
    if not 0 <= t_star < result.T:
        raise MissingSlot(f"slot {t_star} outside result of {result.T} slots")
    init = result.initial or default_initial_state(case.plants, case.storage, case.prosumers)
    s, p, up, down, unit_p, perm = {}, {}, {}, {}, {}, {}
    for g in case.syn_plants:
        series = result.plants[g.id]
        if result.variant is FormulationVariant.BUC:
            units = result.units[g.id]
            blocks = plant_blocks(g, result.variant, init)
            keyed = []
            for i, b in enumerate(blocks):
                uh = _history(units["u"][i], t_star, g.min_up, b.up0)
                dh = _history(units["d"][i], t_star, g.min_down, b.down0)
                on = int(round(units["s"][i][t_star]))
                keyed.append((-on, -len(uh) if on else -len(dh), i, uh, dh))
            keyed.sort()
            perm[g.id] = tuple(k[2] for k in keyed)
            unit_p[g.id] = tuple(float(units["p"][i][t_star]) for i in perm[g.id])
            up[g.id] = _sum_hist([k[3] for k in keyed])
            down[g.id] = _sum_hist([k[4] for k in keyed])
        else:
            up[g.id] = _history(series["u"], t_star, g.min_up, init.up_hist.get(g.id, ()))
            down[g.id] = _history(series["d"], t_star, g.min_down, init.down_hist.get(g.id, ()))
        s[g.id] = int(round(series["s"][t_star]))
        p[g.id] = float(series["p"][t_star])
    state = InitialState(
        s=s, p=p, up_hist={k: v for k, v in up.items() if v},
        down_hist={k: v for k, v in down.items() if v},
        tes={gid: float(e[t_star]) for gid, e in result.tes.items()},
        storage={sid: float(v["soc"][t_star]) for sid, v in result.storage.items()},
        battery={pid: float(v["soc"][t_star]) for pid, v in result.prosumers.items()},
        unit_p=unit_p,
    )
    return state, perm


def _sum_hist(hists) -> tuple[int, ...]:
    n = max((len(h) for h in hists), default=0)
    return tuple(sum(h[k] for h in hists if k < len(h)) for k in range(n))


def _blank_like(tree, T: int):
    if isinstance(tree, dict):
        return {k: _blank_like(v, T) for k, v in tree.items()}
    arr = np.asarray(tree)
    return np.zeros(arr.shape[:-1] + (T,))


def _paste(dst, src, a: int, b: int, off: int, rows=None):
    if isinstance(dst, dict):
        for k in dst:
            _paste(dst[k], src[k], a, b, off, rows)
        return
    if rows is None:
        dst[..., a:b] = src[..., a - off:b - off]
    else:
        dst[rows, a:b] = src[:, a - off:b - off]


def solve_case(case: Case, variant=FormulationVariant.MST, options: Options = Options(),
               init: Optional[InitialState] = None, gap: float = DEFAULT_GAP,
               time_limit: float = float("inf"), backend: str = "reference") -> DispatchResult:
    """Monolithic solve: the whole horizon as one window."""
    return run_rolling(case, plan(case.T, case.T, case.T), variant, options, init, gap,
                       time_limit, backend)


def run_rolling(case: Case, horizon: HorizonPlan, variant=FormulationVariant.MST,
                options: Options = Options(), init: Optional[InitialState] = None,
                gap: float = DEFAULT_GAP, time_limit: float = float("inf"),
                backend: str = "reference") -> DispatchResult:
    """Solve windows in sequence and stitch their committed segments."""
    variant = FormulationVariant(variant)
    if horizon.T != case.T:
        raise InvalidPlan(f"plan covers {horizon.T} slots, case has {case.T}")
    if init is None:
        init = default_initial_state(case.plants, case.storage, case.prosumers)
    state = init
    # identity[g][i]: physical unit held by window-local unit i
    identity = {g.id: list(range(g.units)) for g in case.syn_plants}
    stitched: Optional[DispatchResult] = None
    solves = []
    for w_idx, w in enumerate(horizon.windows):
        sub = case.window(w.solve_start, w.solve_stop)
        ctx = assemble(sub, state, variant, options)
        res = solve(ctx.model, gap=gap, time_limit=time_limit, backend=backend)
        if not res.status.has_solution:
            raise InfeasibleDispatch(
                f"window {w_idx} (slots {w.solve_start + 1}..{w.solve_stop}): "
                f"{res.status.value}", window=w_idx, status=res.status)
        part = extract(ctx, res)
        stats = dict(part.solves[0], window=w_idx, solve=[w.solve_start, w.solve_stop],
                     commit=[w.commit_start, w.commit_stop])
        solves.append(stats)
        if len(horizon.windows) == 1:
            stitched = part
            break
        if stitched is None:
            stitched = replace(
                part, T=case.T, plants=_blank_like(part.plants, case.T),
                flows=_blank_like(part.flows, case.T), angles=_blank_like(part.angles, case.T),
                losses=_blank_like(part.losses, case.T), storage=_blank_like(part.storage, case.T),
                tes=_blank_like(part.tes, case.T), reserve_aux=_blank_like(part.reserve_aux, case.T),
                prosumers=_blank_like(part.prosumers, case.T), units=_blank_like(part.units, case.T),
                initial=init)
        a, b, off = w.commit_start, w.commit_stop, w.solve_start
        for field_name in ("plants", "flows", "angles", "losses", "storage", "tes",
                           "reserve_aux", "prosumers"):
            _paste(getattr(stitched, field_name), getattr(part, field_name), a, b, off)
        for gid, series in part.units.items():
            _paste(stitched.units[gid], series, a, b, off, rows=identity[gid])
        if b < case.T:
            state, perm = carry_state(part, sub, b - off - 1)
            for gid, order in perm.items():
                identity[gid] = [identity[gid][i] for i in order]
    stitched.solves = solves
    stitched.plan = horizon.to_dict()
    stitched.initial = init
    stitched.objective = dispatch_cost(stitched, case)
    stitched.solver_objective = float(sum(s["objective"] for s in solves)) \
        if len(solves) == 1 else float("nan")
    problems = audit_dispatch(stitched, case, init) + audit_time_coupling(stitched, case, init)
    if problems:
        raise AuditFailure("stitched dispatch audit failed: " + "; ".join(problems[:5]))
    return stitched
