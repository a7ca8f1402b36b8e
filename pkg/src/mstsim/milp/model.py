"""Solver-agnostic MILP container: bounded variables, sparse rows, linear objective."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

INF = float("inf")


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class MalformedModel(ValueError):
    pass


@dataclass(frozen=True)
class ModelArrays:
    """Dense/CSR view of a sealed model, rows as ``row_lo <= A x <= row_hi``."""

    c: np.ndarray
    c0: float
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray  # bool mask


class MilpModel:
    """Minimisation MILP built row by row, then sealed.

    Row and variable ids are insertion indices. Names must be unique. Every row
    carries a ``group`` label so counts can be reported per constraint family.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.kinds: list[VarKind] = []
        self.var_groups: list[str] = []
        self.row_names: list[str] = []
        self.row_idx: list[np.ndarray] = []
        self.row_val: list[np.ndarray] = []
        self.senses: list[Sense] = []
        self.rhs: list[float] = []
        self.row_groups: list[str] = []
        self.obj: dict[int, float] = {}
        self.obj_const = 0.0
        self._names: set[str] = set()
        self._sealed: Optional[ModelArrays] = None
        self.meta: dict = {}

    # -- building -------------------------------------------------------
    def _check_open(self):
        if self._sealed is not None:
            raise MalformedModel("model is sealed")

    def _claim(self, name: str):
        if name in self._names:
            raise MalformedModel(f"duplicate name {name!r}")
        self._names.add(name)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF,
                kind: VarKind = VarKind.CONTINUOUS, group: str = "") -> int:
        self._check_open()
        if kind is VarKind.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise MalformedModel(f"variable {name!r} has lb {lb} > ub {ub}")
        self._claim(name)
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.kinds.append(kind)
        self.var_groups.append(group)
        return len(self.var_names) - 1

    def add_row(self, coefs, sense: Sense, rhs: float, name: str,
                group: str = "") -> int:
        """``coefs`` is a mapping or iterable of ``(var, coef)``; repeats are summed."""
        self._check_open()
        items = coefs.items() if isinstance(coefs, dict) else coefs
        acc: dict[int, float] = {}
        n = len(self.var_names)
        for j, a in items:
            if not 0 <= j < n:
                raise MalformedModel(f"row {name!r} references unknown variable {j}")
            acc[j] = acc.get(j, 0.0) + float(a)
        self._claim(name)
        idx = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
        val = np.fromiter(acc.values(), dtype=float, count=len(acc))
        keep = val != 0.0
        self.row_names.append(name)
        self.row_idx.append(idx[keep])
        self.row_val.append(val[keep])
        self.senses.append(Sense(sense))
        self.rhs.append(float(rhs))
        self.row_groups.append(group)
        return len(self.row_names) - 1

    def add_objective(self, var: int, coef: float):
        self._check_open()
        if coef:
            self.obj[var] = self.obj.get(var, 0.0) + float(coef)

    def add_constant(self, value: float):
        self._check_open()
        self.obj_const += float(value)

    def set_bounds(self, var: int, lb: float, ub: float):
        self._check_open()
        if lb > ub:
            raise MalformedModel(f"variable {self.var_names[var]!r} has lb > ub")
        self.lb[var], self.ub[var] = float(lb), float(ub)

    # -- inspection -----------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def n_integer(self) -> int:
        return sum(k is not VarKind.CONTINUOUS for k in self.kinds)

    def counts(self) -> dict:
        """Variable/row counts overall and by group."""
        by_var: dict[str, int] = {}
        for g in self.var_groups:
            by_var[g] = by_var.get(g, 0) + 1
        by_row: dict[str, int] = {}
        for g in self.row_groups:
            by_row[g] = by_row.get(g, 0) + 1
        return {
            "variables": self.n_vars,
            "integer_variables": self.n_integer,
            "constraints": self.n_rows,
            "variables_by_group": dict(sorted(by_var.items())),
            "constraints_by_group": dict(sorted(by_row.items())),
        }

    def check(self):
        """Raise :class:`MalformedModel` if any invariant is broken."""
        for j, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            if not lo <= hi or np.isnan(lo) or np.isnan(hi):
                raise MalformedModel(f"variable {self.var_names[j]!r} has invalid bounds")
        for i, val in enumerate(self.row_val):
            if not np.all(np.isfinite(val)) or not np.isfinite(self.rhs[i]):
                raise MalformedModel(f"row {self.row_names[i]!r} has non-finite data")
        if not all(np.isfinite(v) for v in self.obj.values()):
            raise MalformedModel("objective has non-finite coefficients")

    # -- sealing --------------------------------------------------------
    @property
    def sealed(self) -> bool:
        return self._sealed is not None

    def seal(self) -> ModelArrays:
        if self._sealed is None:
            self.check()
            self._sealed = self._build_arrays()
        return self._sealed

    def arrays(self) -> ModelArrays:
        return self._sealed if self._sealed is not None else self._build_arrays()

    def _build_arrays(self) -> ModelArrays:
        n, m = self.n_vars, self.n_rows
        c = np.zeros(n)
        for j, a in self.obj.items():
            c[j] = a
        lens = np.array([len(ix) for ix in self.row_idx], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(lens)]) if m else np.zeros(1, dtype=np.int64)
        indices = np.concatenate(self.row_idx) if m else np.zeros(0, dtype=np.int64)
        data = np.concatenate(self.row_val) if m else np.zeros(0)
        A = sp.csr_matrix((data, indices, indptr), shape=(m, n))
        rhs = np.array(self.rhs, dtype=float)
        senses = np.array([s.value for s in self.senses])
        row_lo = np.where(senses == "<=", -INF, rhs) if m else np.zeros(0)
        row_hi = np.where(senses == ">=", INF, rhs) if m else np.zeros(0)
        integer = np.array([k is not VarKind.CONTINUOUS for k in self.kinds], dtype=bool)
        return ModelArrays(c, self.obj_const, A, row_lo, row_hi,
                           np.array(self.lb, dtype=float), np.array(self.ub, dtype=float),
                           integer)

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.arrays().c @ np.asarray(x, dtype=float) + self.obj_const)

    def group_rows(self, group: str) -> list[int]:
        return [i for i, g in enumerate(self.row_groups) if g == group]


def row_violations(model: MilpModel, x: Iterable[float], tol: float = 1e-6,
                   int_tol: float = 1e-6) -> list[str]:
    """Independent feasibility audit: evaluates each row from its stored terms.

    Does not reuse the CSR arrays handed to solvers, so a bug in sealing would
    surface here.
    """
    x = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
    bad = []
    if x.shape != (model.n_vars,):
        return [f"solution has {x.size} entries, model has {model.n_vars} variables"]
    for j in range(model.n_vars):
        v = x[j]
        if v < model.lb[j] - tol or v > model.ub[j] + tol:
            bad.append(f"{model.var_names[j]}={v:.9g} outside [{model.lb[j]}, {model.ub[j]}]")
        if model.kinds[j] is not VarKind.CONTINUOUS and abs(v - round(v)) > int_tol:
            bad.append(f"{model.var_names[j]}={v:.9g} not integral")
    for i in range(model.n_rows):
        lhs = 0.0
        for j, a in zip(model.row_idx[i].tolist(), model.row_val[i].tolist()):
            lhs += a * x[j]
        rhs = model.rhs[i]
        sense = model.senses[i]
        if sense is Sense.LE:
            viol = lhs - rhs
        elif sense is Sense.GE:
            viol = rhs - lhs
        else:
            viol = abs(lhs - rhs)
        if viol > tol:
            bad.append(f"{model.row_names[i]}: lhs {lhs:.9g} {sense.value} {rhs:.9g}")
    return bad
