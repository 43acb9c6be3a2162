"""Full boundary-value solves by the iterative transformation method.

Each candidate ``h*`` costs one integration of the augmented star system on
``[0, eta_inf_star]``; a scalar root finder then drives ``Gamma(h*)`` to zero.
The converged star trajectory is mapped back to physical variables with the
scaling group, so the physical problem is never integrated directly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import roots
from .errors import (
    BlowUpError,
    IntegrationBudgetError,
    InvalidParameterError,
    ITMError,
    NonConvergenceError,
    OutOfDomainError,
    ReversedFlowError,
)
from .integrate import ADAPTIVE, FIXED_RK4, IntegratorConfig, Trajectory, integrate
from .model import (
    ModelParams,
    augmented_system,
    evaluate_scaling,
    initial_state,
    rescale_missing_ic,
    rescale_profile,
)

NEWTON = "newton"
SECANT = "secant"
BISECTION = "bisection"
ROOT_METHODS = (NEWTON, SECANT, BISECTION)

# Fixed-step RK4 is trusted while step * rate stays below this, where
# rate = max(|f*|, |f*'|^(1/2), |f*''|^(1/3)) is the inverse length scale of the
# star solution (each component scales like that power of lambda).
RESOLUTION_LIMIT = 0.5
# A converged root with |h* dGamma/dh*| below this was reached because Gamma
# flattens out (root at h* -> infinity), not by a sign change.
ASYMPTOTIC_SLOPE = 1e-4
MAX_SEED_PROBES = 40
# a converged physical profile with f' below this has reversed flow
REVERSAL_TOLERANCE = 1e-3
# Away from the root on long truncations the star solution grows like
# exp(c eta) and its -f f'' term makes the problem stiff, so the explicit
# fallback would crawl. Such points are far from the root (Gamma ~ -1); give up
# on them early and let the root finder back off.
FALLBACK_MAX_STEPS = 20_000


@dataclass(frozen=True)
class SolverConfig:
    params: ModelParams = field(default_factory=ModelParams)
    eta_inf_star: float = 5.0
    tol: float = 1e-9
    h0_star: float = 1.75
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    method: str = NEWTON
    bracket: tuple[float, float] | None = None
    max_iter: int = 50
    profile_samples: int = 0
    resolution_guard: bool = True

    def __post_init__(self):
        if not self.eta_inf_star > 0:
            raise InvalidParameterError("eta_inf_star must be > 0")
        if not self.h0_star > 0:
            raise InvalidParameterError("h0_star must be > 0")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be > 0")
        if self.method not in ROOT_METHODS:
            raise InvalidParameterError(f"unknown root finder {self.method!r}; expected one of {ROOT_METHODS}")
        if self.method == BISECTION and self.bracket is None:
            raise InvalidParameterError("bisection needs a bracket")
        if self.profile_samples < 0:
            raise InvalidParameterError("profile_samples must be >= 0")

    @property
    def beta(self) -> float:
        return self.params.beta

    def with_beta(self, beta: float) -> "SolverConfig":
        return replace(self, params=replace(self.params, beta=beta))


@dataclass(frozen=True)
class Residuals:
    gamma: float
    f0: float
    fp0_error: float
    fp_end: float
    min_fp: float


@dataclass
class SolveResult:
    beta: float
    h_star: float
    lam: float
    fpp0: float
    trace: roots.RootTrace
    residuals: Residuals
    profile: Trajectory | None = None
    method: str = NEWTON
    seed: float = math.nan
    seed_probes: int = 0
    fallback_evaluations: int = 0
    asymptotic: bool = False
    converged: bool = True

    @property
    def iterations(self) -> int:
        return self.trace.iterations


@dataclass
class FailedSolve:
    """A sweep entry that did not converge."""

    beta: float
    error: str
    trace: roots.RootTrace | None = None
    converged: bool = False


class _Unresolved(Exception):
    pass


def resolution_rate(u) -> float:
    """Inverse length scale of a star state ``(f*, f*', f*'', ...)``."""
    return max(abs(u[0]), math.sqrt(abs(u[1])), abs(u[2]) ** (1.0 / 3.0))


@dataclass(frozen=True)
class _Evaluation:
    h_star: float
    u_end: np.ndarray
    lam: float
    gamma: float
    gamma_prime: float | None
    fallback: bool


class GammaEvaluator:
    """Memoised ``h* -> Gamma`` map for one configuration."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.system = augmented_system(cfg.params)
        self.fallbacks = 0
        self._cache: dict[float, _Evaluation | OutOfDomainError] = {}

    def _fallback_cfg(self) -> IntegratorConfig:
        icfg = self.cfg.integrator
        return replace(icfg, method=ADAPTIVE, max_steps=min(icfg.max_steps, FALLBACK_MAX_STEPS))

    def star_trajectory(self, h_star: float, record="endpoint") -> tuple[Trajectory, bool, float]:
        """Integrate the augmented star system.

        Returns:
            The trajectory, whether the adaptive fallback was used, and the
            smallest star slope ``f*'`` met on the way.
        """
        u0 = initial_state(h_star, self.cfg.params).as_array()
        span = (0.0, self.cfg.eta_inf_star)
        icfg = self.cfg.integrator
        lowest = [u0[1]]

        def track(eta, u):
            if u[1] < lowest[0]:
                lowest[0] = u[1]

        if icfg.method != FIXED_RK4 or not self.cfg.resolution_guard:
            return integrate(self.system, u0, span, icfg, record, monitor=track), False, lowest[0]
        limit = RESOLUTION_LIMIT / icfg.step

        def guard(eta, u):
            if resolution_rate(u) > limit:
                raise _Unresolved
            track(eta, u)

        try:
            guard(0.0, u0)
            return integrate(self.system, u0, span, icfg, record, monitor=guard), False, lowest[0]
        except (_Unresolved, BlowUpError):
            pass
        lowest[0] = u0[1]
        try:
            return integrate(self.system, u0, span, self._fallback_cfg(), record, monitor=track), True, lowest[0]
        except BlowUpError as exc:
            exc.min_slope = lowest[0]
            raise

    def evaluate(self, h_star: float) -> _Evaluation:
        hit = self._cache.get(h_star)
        if hit is None:
            try:
                traj, fell_back, lowest = self.star_trajectory(h_star)
                self.fallbacks += fell_back
                u = traj.final_state
                out = evaluate_scaling(u, h_star, self.cfg.params)
                if out.gamma < 0 and lowest < 0:
                    raise ReversedFlowError(
                        f"h* = {h_star!r} lies beyond the dual-branch root (min f*' = {lowest:.3g})", sign=+1
                    )
                hit = _Evaluation(h_star, u, out.lam, out.gamma, out.gamma_prime, fell_back)
            except BlowUpError as exc:
                hit = self._signed_blowup(h_star, exc)
            except OutOfDomainError as exc:
                hit = exc
            except IntegrationBudgetError as exc:
                hit = OutOfDomainError(f"h* = {h_star!r}: {exc}")
            self._cache[h_star] = hit
        if isinstance(hit, OutOfDomainError):
            raise hit
        return hit

    @staticmethod
    def _signed_blowup(h_star: float, exc: BlowUpError) -> OutOfDomainError:
        # f*' -> +inf sends Gamma to -1; f*' -> -inf makes lambda non-real (+)
        slope = exc.state[1] if exc.state is not None else math.nan
        if not math.isfinite(slope) or slope == 0:
            return exc
        if slope < 0:
            exc.sign = +1
            return exc
        if getattr(exc, "min_slope", 0.0) < 0:
            return ReversedFlowError(f"h* = {h_star!r} lies beyond the dual-branch root and blows up", sign=+1)
        exc.sign = -1
        return exc

    def gamma(self, h_star: float) -> float:
        return self.evaluate(h_star).gamma

    def gamma_prime(self, h_star: float) -> float:
        return self.evaluate(h_star).gamma_prime

    def lam(self, h_star: float) -> float:
        return self.evaluate(h_star).lam

    def find_seed(self, h0: float) -> tuple[float, int]:
        """An in-domain h* near ``h0``, and the number of extra probes it took.

        Probes h0, 2 h0, h0/2, 4 h0, h0/4, ... As soon as two probes carry
        opposite out-of-domain signs, the interval between them is bisected
        until a point integrates cleanly.
        """
        candidates = [h0]
        for k in range(1, MAX_SEED_PROBES + 1):
            candidates += [h0 * 2.0**k, h0 / 2.0**k]
        signed: dict[float, int] = {}
        probes = 0
        for x in candidates:
            try:
                self.evaluate(x)
                return x, probes
            except OutOfDomainError as exc:
                probes += 1
                if exc.sign not in (1, -1):
                    continue
                signed[x] = exc.sign
            pair = _opposite_pair(signed)
            if pair is not None:
                (a, sa), (b, _) = pair
                for _ in range(MAX_SEED_PROBES):
                    mid = math.sqrt(a * b)
                    probes += 1
                    try:
                        self.evaluate(mid)
                        return mid, probes
                    except OutOfDomainError as exc:
                        if exc.sign not in (1, -1):
                            break
                        if exc.sign == sa:
                            a = mid
                        else:
                            b = mid
                signed.clear()
        raise NonConvergenceError(f"no h* in [{candidates[-1]:.3g}, {candidates[-2]:.3g}] gives a finite Gamma")


def _opposite_pair(signed: dict[float, int]):
    pts = sorted(signed.items())
    for left, right in zip(pts, pts[1:]):
        if left[1] != right[1]:
            return left, right
    return None


def _subsample(traj: Trajectory, n: int) -> Trajectory:
    if n >= len(traj):
        return traj
    idx = np.unique(np.round(np.linspace(0, len(traj) - 1, max(n, 2))).astype(int))
    return Trajectory(traj.eta[idx], traj.states[idx])


def solve(cfg: SolverConfig) -> SolveResult:
    """Solve the boundary-value problem for ``cfg.params.beta``.

    Raises:
        RootFindingError: the root finder did not converge; the error carries
            the iteration trace.
        InvalidParameterError: invalid configuration (beta <= -2 is rejected
            when ``ModelParams`` is built).
    """
    ev = GammaEvaluator(cfg)
    method = cfg.method
    if method == NEWTON and cfg.params.sigma != 4.0:
        method = SECANT
    seed, probes = cfg.h0_star, 0
    if method != BISECTION:
        seed, probes = ev.find_seed(cfg.h0_star)
    problem = roots.RootProblem(
        f=ev.gamma,
        x0=seed,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        fprime=ev.gamma_prime if method == NEWTON else None,
        bracket=cfg.bracket,
        aux=ev.lam,
    )
    finder = {NEWTON: roots.newton, SECANT: roots.secant, BISECTION: roots.bisection}[method]
    trace = finder(problem)

    h_star = trace.root
    final = ev.evaluate(h_star)
    lam = final.lam
    star, _, _ = ev.star_trajectory(h_star, record="dense")
    phys = rescale_profile(star, lam)
    fp = phys.component(1)
    residuals = Residuals(
        gamma=abs(final.gamma),
        f0=float(phys.states[0, 0]),
        fp0_error=abs(float(fp[0]) - 1.0),
        fp_end=abs(float(fp[-1])),
        min_fp=float(fp.min()),
    )
    if residuals.min_fp < -REVERSAL_TOLERANCE:
        raise NonConvergenceError(
            f"root h* = {h_star!r} lies on the negative-velocity branch (min f' = {residuals.min_fp:.3g})",
            trace,
        )
    slope = final.gamma_prime
    asymptotic = slope is not None and abs(h_star * slope) < ASYMPTOTIC_SLOPE
    return SolveResult(
        beta=cfg.params.beta,
        h_star=h_star,
        lam=lam,
        fpp0=rescale_missing_ic(lam),
        trace=trace,
        residuals=residuals,
        profile=_subsample(phys, cfg.profile_samples) if cfg.profile_samples > 0 else None,
        method=method,
        seed=seed,
        seed_probes=probes,
        fallback_evaluations=ev.fallbacks,
        asymptotic=asymptotic,
    )


def _solve_entry(cfg: SolverConfig):
    try:
        return solve(cfg)
    except ITMError as exc:
        return FailedSolve(cfg.params.beta, str(exc), getattr(exc, "trace", None))


def _entry_config(cfg: SolverConfig, beta: float):
    try:
        return cfg.with_beta(float(beta))
    except ITMError as exc:
        return FailedSolve(float(beta), str(exc))


def sweep_threads() -> int:
    """Sweep parallelism from ``ITM_THREADS``; 0 or unset means sequential."""
    raw = os.environ.get("ITM_THREADS", "").strip()
    if not raw:
        return 0
    try:
        return max(0, int(raw))
    except ValueError:
        raise InvalidParameterError(f"ITM_THREADS must be an integer, got {raw!r}") from None


def sweep(betas: Sequence[float], cfg: SolverConfig, threads: int | None = None) -> list:
    """Solve for every beta, order preserved.

    Sequential sweeps warm-start each solve from the previous converged h*
    (unless that root was asymptotic) and retry from ``cfg.h0_star`` if the warm
    start fails. Parallel sweeps (``threads > 1``) start every entry from
    ``cfg.h0_star`` so results do not depend on scheduling. Failed entries are
    returned as :class:`FailedSolve`.
    """
    threads = sweep_threads() if threads is None else threads
    configs = [_entry_config(cfg, b) for b in betas]
    if threads > 1:
        todo = [(i, c) for i, c in enumerate(configs) if isinstance(c, SolverConfig)]
        out = list(configs)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for (i, _), res in zip(todo, pool.map(_solve_entry, [c for _, c in todo])):
                out[i] = res
        return out

    out = []
    warm = None
    for c in configs:
        if not isinstance(c, SolverConfig):
            out.append(c)
            continue
        res = None
        if warm is not None and warm != c.h0_star:
            res = _solve_entry(replace(c, h0_star=warm))
        if res is None or not res.converged:
            res = _solve_entry(c)
        if res.converged and not res.asymptotic:
            warm = res.h_star
        out.append(res)
    return out


def boundary_study(beta: float, eta_list: Sequence[float], cfg: SolverConfig) -> list[tuple[float, float]]:
    """Missing initial condition f''(0) for each truncated boundary eta_inf_star.

    Each truncation after the first is seeded with the previous converged h*
    (continuation in the truncated boundary) and retried from
    ``cfg.h0_star`` if that fails. Long truncations make Gamma steep near the
    root and nearly flat elsewhere, so a cold start often cannot reach them.
    """
    base = cfg.with_beta(beta)
    rows = []
    warm = None
    for eta in eta_list:
        c = replace(base, eta_inf_star=float(eta))
        res = None
        if warm is not None and warm != c.h0_star:
            try:
                res = solve(replace(c, h0_star=warm))
            except ITMError:
                res = None
        if res is None:
            res = solve(c)
        warm = res.h_star
        rows.append((float(eta), res.fpp0))
    return rows
