from .bundle import (FORMAT_VERSION, ParseError, ScenarioBundle, UnsupportedVersion,
                     ValidationError, load_scenario, read_bundle)
from .persist import load_results, persist_results
from .synthetic import PENETRATIONS, SyntheticCaseSpec, generate_case

__all__ = [
    "FORMAT_VERSION", "ParseError", "ScenarioBundle", "UnsupportedVersion", "ValidationError",
    "load_scenario", "read_bundle", "load_results", "persist_results", "PENETRATIONS",
    "SyntheticCaseSpec", "generate_case",
]
