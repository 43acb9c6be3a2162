"""Classic shooting on the unknown wall curvature ``s = f''(0)``.

The base system is integrated in physical variables from ``(0, 1, s)`` and the
residual is the far-field slope ``f'(eta_inf)``. This shares no code path with
the scaling-group transforms, which makes it a useful cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import roots
from .errors import BlowUpError, InvalidParameterError, NonConvergenceError, OutOfDomainError, RootFindingError
from .integrate import IntegratorConfig, Trajectory, integrate
from .model import ModelParams, base_system

# continuation grows the truncated boundary in steps of about this length
CONTINUATION_STEP = 1.0
# f' below this counts as a reversed (negative-velocity) profile
PHYSICAL_SLACK = 1e-3


@dataclass(frozen=True)
class ShootConfig:
    beta: float = 0.0
    eta_inf: float = 5.0
    tol: float = 1e-8
    s0: float = -0.6
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    max_iter: int = 50

    def __post_init__(self):
        if not self.eta_inf > 0:
            raise InvalidParameterError("eta_inf must be > 0")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be > 0")
        if not math.isfinite(self.s0):
            raise InvalidParameterError("s0 must be finite")
        ModelParams(beta=self.beta)

    @property
    def params(self) -> ModelParams:
        return ModelParams(beta=self.beta)


def shoot_trajectory(s: float, cfg: ShootConfig, record="endpoint") -> Trajectory:
    """Physical trajectory ``(f, f', f'')`` started from ``(0, 1, s)``.

    Raises:
        OutOfDomainError: the trajectory blew up before ``eta_inf``; ``sign``
            is the sign of ``f'`` just before the blow-up.
    """
    if not math.isfinite(s):
        raise InvalidParameterError("s must be finite")
    try:
        return integrate(base_system(cfg.params), (0.0, 1.0, s), (0.0, cfg.eta_inf), cfg.integrator, record)
    except BlowUpError as exc:
        slope = exc.state[1] if exc.state is not None else math.nan
        sign = (1 if slope > 0 else -1) if math.isfinite(slope) and slope != 0 else None
        raise OutOfDomainError(f"shooting from s = {s!r}: {exc}", sign=sign) from exc


def shoot_residual(s: float, cfg: ShootConfig) -> float:
    """Far-field slope ``f'(eta_inf)`` reached from ``f''(0) = s``."""
    return float(shoot_trajectory(s, cfg).final_state[1])


def is_physical(s: float, cfg: ShootConfig) -> bool:
    """True if the trajectory from ``s`` keeps ``f' >= -PHYSICAL_SLACK`` on ``[0, eta_inf]``."""
    traj = shoot_trajectory(s, cfg, record="dense")
    return bool(traj.component(1).min() >= -PHYSICAL_SLACK)


def _secant_from(s0: float, cfg: ShootConfig) -> roots.RootTrace:
    problem = roots.RootProblem(f=lambda s: shoot_residual(s, cfg), x0=s0, tol=cfg.tol, max_iter=cfg.max_iter)
    return roots.secant(problem)


def shoot_solve(cfg: ShootConfig) -> tuple[float, roots.RootTrace]:
    """Drive ``f'(eta_inf)`` to zero with the safeguarded secant method.

    A direct secant run from ``cfg.s0`` is tried first. If it fails or lands on
    a root whose velocity profile turns negative, the truncated boundary is
    grown from ``CONTINUATION_STEP`` to ``eta_inf`` in steps of about that
    length, each solve seeded with the previous root. For beta > 0 the
    residual has a second root on the negative-velocity branch, and on long
    domains small changes in ``s`` blow the trajectory up, so the direct run
    alone is not reliable there.

    Returns:
        The converged ``f''(0)`` and the trace of the last secant run.

    Raises:
        RootFindingError: no convergence; the error carries the trace.
    """
    try:
        trace = _secant_from(cfg.s0, cfg)
        if is_physical(trace.root, cfg):
            return trace.root, trace
    except (OutOfDomainError, RootFindingError):
        pass
    levels = max(1, math.ceil(cfg.eta_inf / CONTINUATION_STEP))
    s = cfg.s0
    trace = None
    for k in range(1, levels + 1):
        level = replace(cfg, eta_inf=cfg.eta_inf * k / levels)
        try:
            trace = _secant_from(s, level)
        except OutOfDomainError as exc:
            raise NonConvergenceError(f"continuation stalled at eta_inf = {level.eta_inf:.6g}: {exc}", trace) from exc
        s = trace.root
    if not is_physical(s, cfg):
        raise NonConvergenceError(f"shooting converged to s = {s!r} on the negative-velocity branch", trace)
    return s, trace
