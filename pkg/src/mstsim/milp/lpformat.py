"""Plain-text model dump in a CPLEX-LP subset, readable by HiGHS and most MILP solvers.

Grammar written::

    \\ name map lines: "\\ x<j> <original variable name>"
    Minimize
     obj: <coef> x<j> + ... + <constant>
    Subject To
     r<i>: <coef> x<j> + ... <= | = | >= <rhs>
    Bounds
     <lb> <= x<j> <= <ub>          (-inf / +inf written as -inf / +inf)
    General
     x<j> ...
    End

Variables are renamed ``x<j>`` and rows ``r<i>`` because model names use
characters outside the LP-format alphabet; the map is kept in comments.
Binaries are emitted as bounded generals.
"""

from __future__ import annotations

from pathlib import Path

from .model import MilpModel, VarKind


def _num(v: float) -> str:
    if v == float("inf"):
        return "+inf"
    if v == float("-inf"):
        return "-inf"
    return repr(float(v))


def _terms(pairs) -> str:
    parts = []
    for j, a in pairs:
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {repr(abs(float(a)))} x{j}")
    if not parts:
        return "0 x0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: MilpModel, path) -> Path:
    path = Path(path)
    lines = [f"\\ model {model.name}"]
    lines += [f"\\ x{j} {name}" for j, name in enumerate(model.var_names)]
    lines.append("Minimize")
    obj = _terms(sorted(model.obj.items()))
    if model.obj_const:
        sign = "-" if model.obj_const < 0 else "+"
        obj += f" {sign} {repr(abs(model.obj_const))}"
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    for i in range(model.n_rows):
        pairs = zip(model.row_idx[i].tolist(), model.row_val[i].tolist())
        lines.append(f" r{i}: {_terms(pairs)} {model.senses[i].value} {_num(model.rhs[i])}")
    lines.append("Bounds")
    for j in range(model.n_vars):
        lines.append(f" {_num(model.lb[j])} <= x{j} <= {_num(model.ub[j])}")
    ints = [f"x{j}" for j, k in enumerate(model.kinds) if k is not VarKind.CONTINUOUS]
    if ints:
        lines.append("General")
        for k in range(0, len(ints), 10):
            lines.append(" " + " ".join(ints[k:k + 10]))
    lines.append("End")
    path.write_text("\n".join(lines) + "\n")
    return path
