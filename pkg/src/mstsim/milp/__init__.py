from .model import INF, MalformedModel, MilpModel, Sense, VarKind, row_violations
from .solve import (BACKENDS, DEFAULT_GAP, SolveResult, SolveStatus, UnknownBackend,
                    lp_relax_solve, solve)
from .bnb import reference_bb_solve
from .lpformat import write_lp

__all__ = [
    "INF", "MalformedModel", "MilpModel", "Sense", "VarKind", "row_violations",
    "BACKENDS", "DEFAULT_GAP", "SolveResult", "SolveStatus", "UnknownBackend",
    "lp_relax_solve", "solve", "reference_bb_solve", "write_lp",
]
