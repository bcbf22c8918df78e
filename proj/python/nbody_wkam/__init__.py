"""Free-time action potentials and weak KAM diagnostics for the N-body problem."""

from ._core import (
    DomainError,
    InvalidInput,
    MassSystem,
    OutOfReach,
    PreconditionError,
    action,
    center_of_mass,
    fixed_point,
    fixed_time,
    kepler_exponent,
    kepler_residual,
    kepler_solution_constant,
    phi,
    potential,
    run_cli,
)

__all__ = [
    "DomainError",
    "InvalidInput",
    "MassSystem",
    "OutOfReach",
    "PreconditionError",
    "action",
    "center_of_mass",
    "fixed_point",
    "fixed_time",
    "kepler_exponent",
    "kepler_residual",
    "kepler_solution_constant",
    "phi",
    "potential",
    "run_cli",
]
__version__ = "0.1.0"
