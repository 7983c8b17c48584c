from src.oracle.costs import (
    analytic_fr_cost,
    analytic_ot_cost_translation,
    discrete_fr_path_cost,
    discrete_ot_cost,
)
from src.oracle.derivatives import fd_check, fd_errors, fd_param_check
from src.oracle.manufactured import ManufacturedPair, growth_factor, growth_pair, translation_pair
from src.oracle.suite import run_validation_suite
from src.oracle.transport import (
    FVGrid,
    FVResult,
    field_potential,
    fv_integrate_continuity,
    mass_timeseries,
    network_potential,
)

__all__ = [
    "FVGrid",
    "FVResult",
    "ManufacturedPair",
    "analytic_fr_cost",
    "analytic_ot_cost_translation",
    "discrete_fr_path_cost",
    "discrete_ot_cost",
    "fd_check",
    "fd_errors",
    "fd_param_check",
    "field_potential",
    "fv_integrate_continuity",
    "growth_factor",
    "growth_pair",
    "mass_timeseries",
    "network_potential",
    "run_validation_suite",
    "translation_pair",
]
