"""Iterative transformation method for the similarity boundary-layer equation
``f''' + f f'' - beta f'^2 = 0`` with ``f(0) = 0``, ``f'(0) = 1``, ``f'(inf) = 0``."""

from .errors import (
    BlowUpError,
    DomainError,
    IntegrationBudgetError,
    InvalidParameterError,
    ITMError,
    NonConvergenceError,
    OutOfDomainError,
    RescaleUndefinedError,
    RootFindingError,
    UnsupportedConfigurationError,
)
from .integrate import IntegratorConfig, OdeSystem, Trajectory, integrate, order_check
from .model import ModelParams
from .shooting import ShootConfig, shoot_residual, shoot_solve
from .solver import SolveResult, SolverConfig, boundary_study, solve, sweep

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "DomainError",
    "IntegrationBudgetError",
    "IntegratorConfig",
    "InvalidParameterError",
    "ITMError",
    "ModelParams",
    "NonConvergenceError",
    "OdeSystem",
    "OutOfDomainError",
    "RescaleUndefinedError",
    "RootFindingError",
    "ShootConfig",
    "SolveResult",
    "SolverConfig",
    "Trajectory",
    "UnsupportedConfigurationError",
    "boundary_study",
    "integrate",
    "order_check",
    "shoot_residual",
    "shoot_solve",
    "solve",
    "sweep",
]
