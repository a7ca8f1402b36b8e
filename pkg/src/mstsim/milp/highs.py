"""Thin helpers around highspy used by every backend."""

from __future__ import annotations

import highspy
import numpy as np

from .model import ModelArrays

FEAS_TOL = 1e-9


def new_highs(*, mip: bool = False, presolve: bool = True) -> highspy.Highs:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("primal_feasibility_tolerance", FEAS_TOL)
    h.setOptionValue("dual_feasibility_tolerance", FEAS_TOL)
    if mip:
        h.setOptionValue("mip_feasibility_tolerance", 1e-7)
    if not presolve:
        h.setOptionValue("presolve", "off")
        h.setOptionValue("solver", "simplex")
    return h


def to_lp(arr: ModelArrays, *, integrality: bool) -> highspy.HighsLp:
    lp = highspy.HighsLp()
    n, m = arr.c.size, arr.row_lo.size
    lp.num_col_ = n
    lp.num_row_ = m
    lp.col_cost_ = arr.c
    lp.col_lower_ = arr.lb
    lp.col_upper_ = arr.ub
    lp.offset_ = arr.c0
    lp.row_lower_ = arr.row_lo
    lp.row_upper_ = arr.row_hi
    lp.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
    lp.a_matrix_.num_col_ = n
    lp.a_matrix_.num_row_ = m
    lp.a_matrix_.start_ = arr.A.indptr.astype(np.int32)
    lp.a_matrix_.index_ = arr.A.indices.astype(np.int32)
    lp.a_matrix_.value_ = arr.A.data
    if integrality and arr.integer.any():
        lp.integrality_ = [highspy.HighsVarType.kInteger if f else highspy.HighsVarType.kContinuous
                           for f in arr.integer]
    return lp


def lp_outcome(h: highspy.Highs):
    """Return ``(kind, objective, x)`` with kind in optimal/infeasible/unbounded/error."""
    status = h.getModelStatus()
    S = highspy.HighsModelStatus
    if status == S.kOptimal:
        info = h.getInfo()
        x = np.asarray(h.getSolution().col_value, dtype=float)
        return "optimal", float(info.objective_function_value), x
    if status in (S.kInfeasible,):
        return "infeasible", float("inf"), None
    if status in (S.kUnbounded, S.kUnboundedOrInfeasible):
        return "unbounded", float("-inf"), None
    if status == S.kTimeLimit:
        return "timelimit", float("nan"), None
    return "error", float("nan"), None


def polish(arr: ModelArrays, x: np.ndarray):
    """Fix integer columns at their rounded values and re-solve the LP for the rest.

    Returns ``(objective, x)`` or ``None`` if the rounded point is infeasible.
    """
    lb, ub = arr.lb.copy(), arr.ub.copy()
    r = np.round(x[arr.integer])
    lb[arr.integer] = r
    ub[arr.integer] = r
    fixed = ModelArrays(arr.c, arr.c0, arr.A, arr.row_lo, arr.row_hi, lb, ub,
                        np.zeros_like(arr.integer))
    h = new_highs()
    h.passModel(to_lp(fixed, integrality=False))
    h.run()
    kind, obj, xs = lp_outcome(h)
    if kind != "optimal":
        return None
    xs[arr.integer] = r
    return obj, xs
