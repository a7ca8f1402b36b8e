"""Solve contract: ``MilpModel -> SolveResult`` with pluggable backends."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import highspy
import numpy as np

from .highs import lp_outcome, new_highs, polish, to_lp
from .model import MalformedModel, MilpModel

DEFAULT_GAP = 0.01
INT_TOL = 1e-6


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE_AT_GAP = "FeasibleAtGap"  # stopped by the time limit with an incumbent
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"  # stopped by the time limit without an incumbent

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE_AT_GAP)


class UnknownBackend(ValueError):
    pass


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float = float("nan")
    x: Optional[np.ndarray] = None
    gap: float = float("nan")
    wall_time: float = 0.0
    nodes: int = 0
    bound: float = float("nan")
    backend: str = ""
    extra: dict = field(default_factory=dict)

    def stats(self) -> dict:
        return {
            "status": self.status.value, "objective": self.objective, "gap": self.gap,
            "bound": self.bound, "wall_time": self.wall_time, "nodes": self.nodes,
            "backend": self.backend,
        }


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent) or not np.isfinite(bound):
        return float("inf")
    diff = max(incumbent - bound, 0.0)
    if diff <= 1e-9 * max(1.0, abs(incumbent)):
        return 0.0
    return diff / max(abs(incumbent), 1e-9)


def _highs_mip(model: MilpModel, gap: float, time_limit: float) -> SolveResult:
    arr = model.seal()
    t0 = time.perf_counter()
    h = new_highs(mip=True)
    h.setOptionValue("mip_rel_gap", gap)
    h.setOptionValue("mip_abs_gap", 1e-9)
    if np.isfinite(time_limit):
        h.setOptionValue("time_limit", float(time_limit))
    h.passModel(to_lp(arr, integrality=True))
    h.run()
    S = highspy.HighsModelStatus
    st = h.getModelStatus()
    info = h.getInfo()
    nodes = int(info.mip_node_count) if arr.integer.any() else 0
    bound = float(info.mip_dual_bound) if arr.integer.any() else float(info.objective_function_value)
    has_x = info.primal_solution_status == 2
    if st in (S.kInfeasible,):
        return SolveResult(SolveStatus.INFEASIBLE, wall_time=time.perf_counter() - t0,
                           nodes=nodes, backend="highs")
    if st in (S.kUnbounded, S.kUnboundedOrInfeasible):
        return SolveResult(SolveStatus.UNBOUNDED, wall_time=time.perf_counter() - t0,
                           nodes=nodes, backend="highs")
    if not has_x:
        return SolveResult(SolveStatus.TIME_LIMIT, wall_time=time.perf_counter() - t0,
                           nodes=nodes, bound=bound, backend="highs")
    x = np.asarray(h.getSolution().col_value, dtype=float)
    polished = polish(arr, x) if arr.integer.any() else (float(info.objective_function_value), x)
    if polished is None:
        raise RuntimeError("HiGHS incumbent could not be polished to a feasible point")
    obj, x = polished
    if not arr.integer.any():
        bound = obj
    g = relative_gap(obj, bound)
    status = SolveStatus.OPTIMAL if st == S.kOptimal else SolveStatus.FEASIBLE_AT_GAP
    if status is SolveStatus.OPTIMAL:
        g = min(g, gap)
    return SolveResult(status, obj, x, g, time.perf_counter() - t0, nodes, bound, "highs")


def lp_relax_solve(model: MilpModel) -> SolveResult:
    """Solve with integrality dropped (root relaxation)."""
    arr = model.seal()
    t0 = time.perf_counter()
    h = new_highs()
    h.passModel(to_lp(arr, integrality=False))
    h.run()
    kind, obj, x = lp_outcome(h)
    wall = time.perf_counter() - t0
    if kind == "optimal":
        return SolveResult(SolveStatus.OPTIMAL, obj, x, 0.0, wall, 0, obj, "lp")
    if kind == "infeasible":
        return SolveResult(SolveStatus.INFEASIBLE, wall_time=wall, backend="lp")
    if kind == "unbounded":
        return SolveResult(SolveStatus.UNBOUNDED, wall_time=wall, backend="lp")
    raise RuntimeError(f"LP relaxation failed ({kind})")


def _backends():
    from .bnb import reference_bb_solve

    return {"reference": reference_bb_solve, "highs": _highs_mip}


BACKENDS = ("reference", "highs")


def solve(model: MilpModel, gap: float = DEFAULT_GAP, time_limit: float = float("inf"),
          backend: str = "reference") -> SolveResult:
    """Solve ``model`` to relative ``gap`` with the named backend."""
    table = _backends()
    if backend not in table:
        raise UnknownBackend(f"unknown backend {backend!r}; choose from {sorted(table)}")
    if gap < 0:
        raise MalformedModel("gap must be nonnegative")
    model.seal()
    return table[backend](model, gap, time_limit)
