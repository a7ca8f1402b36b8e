"""Unit-commitment market simulator with clustered integer commitment."""

from .formulation import AGG, BUC, MST, FormulationVariant, Options, assemble
from .milp import solve
from .model import Case, InitialState, validate_case
from .results import AuditFailure, DispatchResult, InfeasibleDispatch, extract
from .rolling import plan, run_rolling, solve_case

__version__ = "0.1.0"

__all__ = [
    "AGG", "BUC", "MST", "FormulationVariant", "Options", "assemble", "solve", "Case",
    "InitialState", "validate_case", "AuditFailure", "DispatchResult", "InfeasibleDispatch",
    "extract", "plan", "run_rolling", "solve_case",
]
