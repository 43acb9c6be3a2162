"""Similarity equation ``f''' + f f'' - beta f'^2 = 0`` and its scaling-group transforms.

The star problem is integrated with ``f*(0) = 0``, ``f*'(0) = h*^(2/sigma)``,
``f*''(0) = -1``. The group ``f* = lam f``, ``eta* = eta / lam``,
``h* = lam^sigma h`` maps it back to physical variables, and the transformation
function ``Gamma(h*) = lam^-sigma h* - 1`` vanishes exactly when the embedded
parameter ``h`` returns to 1, i.e. when the far-field condition ``f'(inf) = 0``
holds.

State vectors use the layout ``(u1, u2, u3, u4, u5, u6)`` =
``(f, f', f'', df/dh*, df'/dh*, df''/dh*)`` in star variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DomainError,
    InvalidParameterError,
    RescaleUndefinedError,
    UnsupportedConfigurationError,
)
from .integrate import OdeSystem, Trajectory

# Exponent of eta in the scaling group; the only value leaving the equation and
# the initial conditions invariant.
DELTA = -1.0
# f*''(0) is fixed by the star initial conditions
STAR_CURVATURE = -1.0


@dataclass(frozen=True)
class ModelParams:
    beta: float = 0.0
    sigma: float = 4.0

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise InvalidParameterError("beta must be finite")
        if self.beta <= -2.0:
            raise InvalidParameterError(
                f"beta = {self.beta} is not admissible: no solution exists for beta <= -2"
            )
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidParameterError("sigma must be a positive real")

    @property
    def delta(self) -> float:
        return DELTA


class AugmentedState(NamedTuple):
    u1: float
    u2: float
    u3: float
    u4: float
    u5: float
    u6: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class ScalingOutcome:
    lam: float
    h_star: float
    gamma: float
    gamma_prime: float | None = None


def rhs_base(eta: float, u: Sequence[float], p: ModelParams) -> np.ndarray:
    u1, u2, u3 = u[0], u[1], u[2]
    return np.array([u2, u3, p.beta * u2 * u2 - u1 * u3])


def rhs_augmented(eta: float, u: Sequence[float], p: ModelParams) -> np.ndarray:
    """Base equation plus its linearisation with respect to h*."""
    u1, u2, u3, u4, u5, u6 = (u[j] for j in range(6))
    b = p.beta
    return np.array(
        [u2, u3, b * u2 * u2 - u1 * u3, u5, u6, 2.0 * b * u2 * u5 - u4 * u3 - u1 * u6]
    )


def base_system(p: ModelParams) -> OdeSystem:
    b = p.beta

    def rhs(eta, u):
        u1, u2, u3 = u.tolist()
        return np.array((u2, u3, b * u2 * u2 - u1 * u3))

    return OdeSystem(3, rhs)


def augmented_system(p: ModelParams) -> OdeSystem:
    b = p.beta

    def rhs(eta, u):
        u1, u2, u3, u4, u5, u6 = u.tolist()
        return np.array((u2, u3, b * u2 * u2 - u1 * u3, u5, u6, 2.0 * b * u2 * u5 - u4 * u3 - u1 * u6))

    return OdeSystem(6, rhs)


def _check_h_star(h_star: float):
    if not (math.isfinite(h_star) and h_star > 0):
        raise DomainError(f"h* must be a positive real, got {h_star!r}")


def initial_state(h_star: float, p: ModelParams) -> AugmentedState:
    """Star initial data and their h*-derivatives for the augmented system."""
    _check_h_star(h_star)
    e = 2.0 / p.sigma
    return AugmentedState(0.0, h_star**e, STAR_CURVATURE, 0.0, e * h_star ** (e - 1.0), 0.0)


def compute_lambda(u2_end: float, h_star: float, p: ModelParams) -> float:
    """Group parameter from the star slope at the truncated boundary."""
    _check_h_star(h_star)
    q = u2_end + h_star ** (2.0 / p.sigma)
    if not q > 0:
        # Gamma -> +inf as q -> 0+, so the sign of the out-of-domain side is known
        raise RescaleUndefinedError(
            f"lambda is not real: f*'(end) + h*^(2/sigma) = {q:.6g} <= 0", sign=+1
        )
    return math.sqrt(q)


def gamma(u2_end: float, h_star: float, p: ModelParams) -> float:
    lam = compute_lambda(u2_end, h_star, p)
    return lam ** (-p.sigma) * h_star - 1.0


def gamma_derivative(u2_end: float, u5_end: float, h_star: float, sigma: float = 4.0) -> float:
    """dGamma/dh* from the endpoint slope ``u2_end`` and its sensitivity ``u5_end``.

    Only the sigma = 4 closed form is available; use a derivative-free root
    finder for other sigma.
    """
    if sigma != 4.0:
        raise UnsupportedConfigurationError(
            f"analytic dGamma/dh* is only available for sigma = 4 (got {sigma}); use secant"
        )
    _check_h_star(h_star)
    r = math.sqrt(h_star)
    q = u2_end + r
    if not q > 0:
        raise RescaleUndefinedError(f"lambda is not real: f*'(end) + h*^(1/2) = {q:.6g} <= 0", sign=+1)
    return q**-2 * (1.0 - 2.0 * (u5_end + 0.5 / r) / q * h_star)


def evaluate_scaling(u_end: Sequence[float], h_star: float, p: ModelParams, derivative: bool = True) -> ScalingOutcome:
    """lambda, Gamma and (when available) dGamma/dh* from an augmented endpoint state."""
    lam = compute_lambda(u_end[1], h_star, p)
    g = lam ** (-p.sigma) * h_star - 1.0
    gp = None
    if derivative and p.sigma == 4.0 and len(u_end) >= 6:
        gp = gamma_derivative(u_end[1], u_end[4], h_star)
    return ScalingOutcome(lam, h_star, g, gp)


def rescale_missing_ic(lam: float) -> float:
    """Physical f''(0) = lam^-3 f*''(0)."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return lam**-3 * STAR_CURVATURE


def rescale_profile(star: Trajectory, lam: float) -> Trajectory:
    """Map a star trajectory to physical (eta, f, f', f''); sensitivities are dropped."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    s = star.states
    phys = np.column_stack((s[:, 0] / lam, s[:, 1] / lam**2, s[:, 2] / lam**3))
    return Trajectory(star.eta * lam, phys)
