from .core import (Block, Context, FormulationVariant, IslandWithoutReference, Options,
                   VariableIndex, assemble, commitment_variable_count, emit_commitment_logic,
                   emit_cst, emit_dc_flow, emit_generation_limits, emit_inertia, emit_mudt,
                   emit_objective, emit_power_balance, emit_ramps, emit_reserves, emit_storage,
                   emit_thermal_limits, plant_blocks)
from .prosumer import (InfeasibleProsumer, UnboundedDual, emit_prosumer_kkt, lower_level_lp,
                       presolve_prosumers, solve_lower_level)

MST, BUC, AGG = FormulationVariant.MST, FormulationVariant.BUC, FormulationVariant.AGG
