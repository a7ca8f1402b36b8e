"""Bundled reference branch-and-bound.

LP relaxations are solved by HiGHS dual simplex, warm-started across nodes by
changing column bounds only. Node selection is best-bound with depth as the
tie-break; until the first incumbent exists the search dives (deepest node
first). After that each branching plunges into the child on the rounding side
and backtracks best-first once the plunge is pruned. Branching picks the most fractional integer variable, lowest id on ties.

Once an incumbent exists, LP reduced costs tighten integer bounds: at the root
the tightening is global, at other nodes it applies to the node's subtree.
"""

from __future__ import annotations

import heapq
import itertools
import time

import numpy as np

from .highs import lp_outcome, new_highs, polish, to_lp
from .model import MilpModel
from .solve import INT_TOL, SolveResult, SolveStatus, relative_gap


class _Node:
    __slots__ = ("parent", "own", "bound", "depth")

    def __init__(self, parent, own, bound, depth):
        self.parent = parent
        self.own = own  # list of (var, lo, hi) bound changes made at this node
        self.bound = bound
        self.depth = depth

    def changes(self):
        out = []
        node = self
        while node is not None:
            out.extend(reversed(node.own))
            node = node.parent
        return out[::-1]


def _prune_tol(incumbent: float, gap: float) -> float:
    return max(gap * abs(incumbent), 1e-9 * max(1.0, abs(incumbent)))


def _reduced_cost_bounds(obj, x, d, lb, ub, cutoff):
    """Integer bounds implied by ``obj + d.(x' - x) < cutoff`` (LP duality).

    Works on the integer columns only; returns ``(new_lb, new_ub)``.
    """
    room = cutoff - obj
    new_lb, new_ub = lb.copy(), ub.copy()
    if room < 0:
        return new_lb, new_ub
    at_lo = (d > 1e-7) & (np.abs(x - lb) <= INT_TOL)
    at_hi = (d < -1e-7) & (np.abs(x - ub) <= INT_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        span = np.floor(room / np.abs(d) + 1e-6)
    new_ub[at_lo] = np.minimum(ub[at_lo], lb[at_lo] + span[at_lo])
    new_lb[at_hi] = np.maximum(lb[at_hi], ub[at_hi] - span[at_hi])
    return new_lb, new_ub


def reference_bb_solve(model: MilpModel, gap: float = 0.01,
                       time_limit: float = float("inf")) -> SolveResult:
    arr = model.seal()
    t0 = time.perf_counter()
    int_idx = np.flatnonzero(arr.integer)
    root_lb, root_ub = arr.lb[int_idx].copy(), arr.ub[int_idx].copy()
    # integer bounds are integral by definition of the feasible set
    root_lb = np.ceil(root_lb - INT_TOL)
    root_ub = np.floor(root_ub + INT_TOL)
    if np.any(root_lb > root_ub):
        return SolveResult(SolveStatus.INFEASIBLE, wall_time=time.perf_counter() - t0,
                           backend="reference")
    pos = {int(j): k for k, j in enumerate(int_idx)}

    h = new_highs(presolve=False)
    h.passModel(to_lp(arr, integrality=False))
    if int_idx.size:
        h.changeColsBounds(int_idx.size, int_idx.astype(np.int32), root_lb, root_ub)
    cur_lb, cur_ub = root_lb.copy(), root_ub.copy()

    def load(node):
        nonlocal cur_lb, cur_ub
        lb, ub = root_lb.copy(), root_ub.copy()
        for var, lo, hi in node.changes():
            k = pos[var]
            lb[k], ub[k] = max(lb[k], lo), min(ub[k], hi)
        diff = np.flatnonzero((lb != cur_lb) | (ub != cur_ub))
        if diff.size:
            h.changeColsBounds(diff.size, int_idx[diff].astype(np.int32), lb[diff], ub[diff])
        cur_lb, cur_ub = lb, ub

    incumbent, inc_x = float("inf"), None
    nodes = 0
    heap: list = []
    seq = itertools.count()
    diving = True
    timed_out = False
    pruned_bound = float("inf")  # lowest bound among nodes discarded by bound

    root_lp = None  # (obj, x, reduced costs) on integer columns

    def cutoff():
        return incumbent - _prune_tol(incumbent, gap)

    def tighten_root():
        nonlocal root_lb, root_ub
        if root_lp is None or inc_x is None:
            return
        root_lb, root_ub = _reduced_cost_bounds(*root_lp, root_lb, root_ub, cutoff())

    root = _Node(None, [], -float("inf"), 0)
    pending = [root]  # LIFO stack used while diving
    while pending or heap:
        if time.perf_counter() - t0 > time_limit:
            timed_out = True
            break
        if pending:
            node = pending.pop()
        else:
            _, _, _, node = heapq.heappop(heap)
        if node.bound >= incumbent - _prune_tol(incumbent, gap):
            pruned_bound = min(pruned_bound, node.bound)
            continue
        load(node)
        h.run()
        nodes += 1
        kind, obj, x = lp_outcome(h)
        if kind == "unbounded":
            if node is root:
                return SolveResult(SolveStatus.UNBOUNDED, wall_time=time.perf_counter() - t0,
                                   nodes=nodes, backend="reference")
            continue
        if kind != "optimal":
            if kind == "infeasible":
                continue
            raise RuntimeError(f"LP oracle failed at node {nodes} ({kind})")
        if obj >= incumbent - _prune_tol(incumbent, gap):
            pruned_bound = min(pruned_bound, obj)
            continue
        xi = x[int_idx]
        if node is root:
            d = np.asarray(h.getSolution().col_dual, dtype=float)[int_idx]
            root_lp = (obj, xi.copy(), d)
        frac = np.abs(xi - np.round(xi))
        if not np.any(frac > INT_TOL):
            polished = polish(arr, x)
            # warm-start basis in h is unaffected by the separate polish solve
            if polished is not None and polished[0] < incumbent:
                incumbent, inc_x = polished
                if diving:
                    diving = False
                    for nd in pending:
                        heapq.heappush(heap, (nd.bound, -nd.depth, next(seq), nd))
                    pending = []
                tighten_root()
            continue
        if inc_x is not None and node is not root:
            d = np.asarray(h.getSolution().col_dual, dtype=float)[int_idx]
            nlb, nub = _reduced_cost_bounds(obj, xi, d, cur_lb, cur_ub, cutoff())
            moved = np.flatnonzero((nlb != cur_lb) | (nub != cur_ub))
            node.own.extend((int(int_idx[k]), nlb[k], nub[k]) for k in moved)
        # most fractional: distance to nearest integer closest to 0.5
        score = np.where(frac > INT_TOL, frac, -1.0)
        k = int(np.argmax(score))  # argmax returns the lowest index on ties
        var = int(int_idx[k])
        v = xi[k]
        down = _Node(node, [(var, -np.inf, np.floor(v))], obj, node.depth + 1)
        up = _Node(node, [(var, np.ceil(v), np.inf)], obj, node.depth + 1)
        # the child on the rounding side is explored next
        near, far = (up, down) if v - np.floor(v) >= 0.5 else (down, up)
        if diving:
            pending.extend([far, near])
        else:
            # plunge into the near child, keep the sibling for best-first backtracking
            heapq.heappush(heap, (obj, -far.depth, next(seq), far))
            pending.append(near)

    wall = time.perf_counter() - t0
    open_bounds = [nd.bound for nd in pending] + [e[0] for e in heap]
    if timed_out:
        bound = min(open_bounds + [pruned_bound, incumbent])
        if inc_x is None:
            return SolveResult(SolveStatus.TIME_LIMIT, wall_time=wall, nodes=nodes,
                               bound=bound, backend="reference")
        g = relative_gap(incumbent, bound)
        status = SolveStatus.OPTIMAL if g <= gap else SolveStatus.FEASIBLE_AT_GAP
        return SolveResult(status, incumbent, inc_x, g, wall, nodes, bound, "reference")
    if inc_x is None:
        return SolveResult(SolveStatus.INFEASIBLE, wall_time=wall, nodes=nodes,
                           backend="reference")
    bound = min(pruned_bound, incumbent)
    g = relative_gap(incumbent, bound)
    return SolveResult(SolveStatus.OPTIMAL, incumbent, inc_x, g, wall, nodes, bound,
                       "reference")
