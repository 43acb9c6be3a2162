"""Explicit initial-value integrators for small first-order systems.

Two methods are provided: classical fixed-step RK4 and the Dormand-Prince
5(4) embedded pair with PI step-size control. Both land exactly on the end of
the requested interval and raise :class:`BlowUpError` as soon as a state
component stops being finite or exceeds ``blowup_limit`` in magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import BlowUpError, IntegrationBudgetError, InvalidParameterError

Rhs = Callable[[float, np.ndarray], np.ndarray]
Monitor = Callable[[float, np.ndarray], None]
Sampling = Union[str, int]

FIXED_RK4 = "fixed-rk4"
ADAPTIVE = "adaptive"
METHODS = (FIXED_RK4, ADAPTIVE)


@dataclass(frozen=True)
class OdeSystem:
    """``du/deta = rhs(eta, u)`` with ``u`` of length ``dimension``."""

    dimension: int
    rhs: Rhs

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidParameterError("dimension must be positive")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = FIXED_RK4
    step: float = 0.01
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 1_000_000
    # states larger than this count as a blow-up; inf keeps the non-finite test only
    blowup_limit: float = 1e15

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"unknown integrator {self.method!r}; expected one of {METHODS}")
        if not self.step > 0:
            raise InvalidParameterError("step must be > 0")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidParameterError("abs_tol and rel_tol must be > 0")
        if self.max_steps < 1:
            raise InvalidParameterError("max_steps must be >= 1")
        if not self.blowup_limit > 0:
            raise InvalidParameterError("blowup_limit must be > 0")


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(eta[i], states[i])`` of one integration, ``states`` shaped (n, dim)."""

    eta: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] != self.eta.shape[0]:
            raise InvalidParameterError("states must be (len(eta), dimension)")
        if self.eta.size > 1 and not np.all(np.diff(self.eta) > 0):
            raise InvalidParameterError("trajectory abscissae must be strictly increasing")

    def __len__(self):
        return self.eta.shape[0]

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def final_eta(self) -> float:
        return float(self.eta[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def component(self, j: int) -> np.ndarray:
        return self.states[:, j]


class _Recorder:
    def __init__(self, policy: Sampling):
        if policy == "dense":
            self.every = 1
        elif policy == "endpoint":
            self.every = 0
        elif isinstance(policy, (int, np.integer)) and not isinstance(policy, bool) and policy >= 1:
            self.every = int(policy)
        else:
            raise InvalidParameterError(f"bad sampling policy {policy!r}")
        self.eta: list[float] = []
        self.states: list[np.ndarray] = []

    def add(self, eta, u):
        self.eta.append(eta)
        self.states.append(u)

    def maybe_add(self, index, eta, u):
        if self.every and index % self.every == 0:
            self.add(eta, u)

    def finish(self, eta, u) -> Trajectory:
        if self.eta and self.eta[-1] == eta:
            self.states[-1] = u
        else:
            self.add(eta, u)
        return Trajectory(np.asarray(self.eta, dtype=float), np.vstack(self.states))


def _finite(u: np.ndarray) -> bool:
    return bool(np.isfinite(u).all())


def _bounded(u: np.ndarray, limit: float) -> bool:
    # NaN fails the comparison as well
    return bool(np.abs(u).max() <= limit)


def fixed_step_count(length: float, step: float) -> int:
    """Number of RK4 steps covering ``length``; the last one may be shorter."""
    return max(1, math.ceil(length / step * (1.0 - 1e-12)))


def integrate(
    system: OdeSystem,
    u0: Sequence[float],
    span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
    record: Sampling = "endpoint",
    monitor: Monitor | None = None,
) -> Trajectory:
    """Integrate ``system`` from ``u0`` over ``span``.

    Args:
        system: the ODE.
        u0: initial state, length ``system.dimension``.
        span: ``(eta_start, eta_end)`` with ``eta_end > eta_start``.
        cfg: integrator settings, defaults to RK4 with step 0.01.
        record: ``"dense"`` (every step), ``"endpoint"`` (first and last node
            only) or a positive int ``k`` (every k-th step).
        monitor: called as ``monitor(eta, u)`` after every accepted step; it may
            raise to abort the integration.

    Returns:
        The sampled trajectory; its last node is exactly ``eta_end``.

    Raises:
        BlowUpError: a state component became non-finite or exceeded
            ``cfg.blowup_limit``.
        IntegrationBudgetError: more than ``cfg.max_steps`` steps were needed.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise InvalidParameterError("integration span must satisfy eta_end > eta_start")
    u = np.array(u0, dtype=float)
    if u.shape != (system.dimension,):
        raise InvalidParameterError(f"initial state must have length {system.dimension}")
    if not _bounded(u, cfg.blowup_limit):
        raise BlowUpError(t0, u)
    rec = _Recorder(record)
    rec.add(t0, u)
    if cfg.method == FIXED_RK4:
        u = _rk4(system.rhs, u, t0, t1, cfg, rec, monitor)
    else:
        u = _dopri(system.rhs, u, t0, t1, cfg, rec, monitor)
    return rec.finish(t1, u)


def _rk4(rhs, u, t0, t1, cfg, rec, monitor):
    step = cfg.step
    n = fixed_step_count(t1 - t0, step)
    if n > cfg.max_steps:
        raise IntegrationBudgetError(cfg.max_steps, t0)
    for i in range(n):
        t = t0 + i * step
        h = step if i < n - 1 else t1 - t
        hh = 0.5 * h
        k1 = rhs(t, u)
        k2 = rhs(t + hh, u + hh * k1)
        k3 = rhs(t + hh, u + hh * k2)
        k4 = rhs(t + h, u + h * k3)
        u_new = u + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not _bounded(u_new, cfg.blowup_limit):
            raise BlowUpError(t, u)
        u = u_new
        t_new = t1 if i == n - 1 else t0 + (i + 1) * step
        if monitor is not None:
            monitor(t_new, u)
        rec.maybe_add(i + 1, t_new, u)
    return u


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# difference between the 5th- and 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA = 0.04  # PI control, Hairer-Wanner choice
_ALPHA = 0.2 - 0.75 * _BETA


def _error_norm(err, u, u_new, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(u), np.abs(u_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, u, f0, span, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(u)
    d0 = math.sqrt(float(np.mean((u / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(t0 + h0, u + h0 * f0)
    if not _finite(f1):
        return min(h0, 1e-6 * span)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _dopri(rhs, u, t0, t1, cfg, rec, monitor):
    t = t0
    f = rhs(t, u)
    h = _initial_step(rhs, t, u, f, t1 - t0, cfg)
    err_old = 1e-4
    k = [f, None, None, None, None, None, None]
    accepted = 0
    for _ in range(cfg.max_steps):
        last = t + h >= t1 - 1e-12 * max(1.0, abs(t1))
        if last:
            h = t1 - t
        for s in range(1, 7):
            a = _A[s]
            du = a[0] * k[0]
            for j in range(1, s):
                if a[j]:
                    du = du + a[j] * k[j]
            k[s] = rhs(t + _C[s] * h, u + h * du)
        u_new = u + h * (
            _A[6][0] * k[0] + _A[6][2] * k[2] + _A[6][3] * k[3] + _A[6][4] * k[4] + _A[6][5] * k[5]
        )
        err_vec = h * (
            _E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3] + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6]
        )
        finite = _finite(u_new) and _finite(err_vec)
        err = _error_norm(err_vec, u, u_new, cfg) if finite else math.inf
        if err <= 1.0:
            if not _bounded(u_new, cfg.blowup_limit):
                raise BlowUpError(t, u)
            t = t1 if last else t + h
            u = u_new
            k[0] = k[6]
            accepted += 1
            if monitor is not None:
                monitor(t, u)
            if last:
                return u
            rec.maybe_add(accepted, t, u)
            fac = _SAFETY * err ** -_ALPHA * err_old**_BETA if err > 0 else _FAC_MAX
            h *= min(_FAC_MAX, max(_FAC_MIN, fac))
            err_old = max(err, 1e-4)
        else:
            fac = _SAFETY * err ** -_ALPHA if math.isfinite(err) else _FAC_MIN
            h *= max(_FAC_MIN, min(1.0, fac))
        if h <= 1e-14 * max(1.0, abs(t)):
            # step size collapse: a finite-eta singularity
            raise BlowUpError(t, u)
    raise IntegrationBudgetError(cfg.max_steps, t)


def order_check(
    system: OdeSystem,
    u0: Sequence[float],
    span: tuple[float, float],
    steps: Iterable[float],
    exact: Sequence[float] | None = None,
    reference_step: float = 1e-4,
) -> list[tuple[float, float]]:
    """Endpoint error of fixed-step RK4 for each step size.

    The error is the max-norm distance to ``exact`` or, when no exact endpoint
    is known, to an RK4 run at ``reference_step``.
    """
    if exact is None:
        ref_cfg = IntegratorConfig(step=reference_step, max_steps=10**8)
        ref = integrate(system, u0, span, ref_cfg).final_state
    else:
        ref = np.asarray(exact, dtype=float)
    out = []
    for h in steps:
        end = integrate(system, u0, span, IntegratorConfig(step=h, max_steps=10**8)).final_state
        out.append((float(h), float(np.max(np.abs(end - ref)))))
    return out


def error_ratios(results: Sequence[tuple[float, float]]) -> list[float]:
    """Successive error ratios ``e(h_i) / e(h_{i+1})`` of an :func:`order_check` result."""
    return [results[i][1] / results[i + 1][1] for i in range(len(results) - 1)]
