"""Scalar root finders with a full iteration trace.

``newton`` and ``secant`` are globalised the same way:

* an out-of-domain trial point halves the step back toward the last good
  iterate (at most 30 halvings);
* a trial is accepted only if it reduces ``|f|`` or changes its sign, which
  keeps the iteration from wandering onto a different branch;
* once two iterates of opposite sign are known the step is confined to that
  bracket, falling back to bisection when the model step leaves it.

None of this changes a well-behaved run: plain Newton steps that keep
reducing ``|f|`` are taken unmodified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import (
    DerivativeDegenerateError,
    InvalidBracketError,
    InvalidParameterError,
    NoProgressError,
    NonConvergenceError,
    OutOfDomainError,
)

MAX_HALVINGS = 30
DERIVATIVE_FLOOR = 1e-14
SECANT_OFFSET = 1e-4


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    x: float
    fx: float
    aux: float | None = None


@dataclass
class RootTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    root: float = math.nan
    evaluations: int = 0

    @property
    def iterations(self) -> int:
        """Number of steps taken after the initial evaluation."""
        return max(0, len(self.records) - 1)

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


@dataclass(frozen=True)
class RootProblem:
    """Find ``x`` with ``|f(x)| < tol``.

    ``f`` may raise :class:`OutOfDomainError`. ``aux`` is an optional quantity
    recorded alongside every iterate.
    """

    f: Callable[[float], float]
    x0: float = math.nan
    tol: float = 1e-9
    max_iter: int = 50
    fprime: Callable[[float], float] | None = None
    bracket: tuple[float, float] | None = None
    aux: Callable[[float], float] | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameterError("tol must be > 0")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be >= 1")
        if self.bracket is not None and not self.bracket[0] < self.bracket[1]:
            raise InvalidParameterError("bracket must satisfy lo < hi")


class _Evaluator:
    """Counts evaluations and remembers the sign seen at each abscissa."""

    def __init__(self, problem: RootProblem, trace: RootTrace):
        self.problem = problem
        self.trace = trace
        self.signs: dict[float, int] = {}

    def __call__(self, x: float) -> float | None:
        """``f(x)``, or None when out of domain."""
        self.trace.evaluations += 1
        try:
            fx = float(self.problem.f(x))
        except OutOfDomainError as exc:
            if exc.sign in (1, -1):
                self.signs[x] = exc.sign
            return None
        if not math.isfinite(fx):
            return None
        if fx != 0.0:
            self.signs[x] = 1 if fx > 0 else -1
        return fx

    def record(self, x: float, fx: float):
        aux = self.problem.aux(x) if self.problem.aux is not None else None
        self.trace.records.append(IterationRecord(len(self.trace.records), x, fx, aux))

    def opposite_neighbour(self, x: float, sign: int) -> float | None:
        cands = [y for y, s in self.signs.items() if s == -sign and y != x]
        if not cands:
            return None
        return min(cands, key=lambda y: abs(y - x))


def _sign(v: float) -> int:
    return 1 if v > 0 else -1


def _update_bracket(bracket, ev: _Evaluator, x: float, fx: float, came_from: float | None = None):
    s = _sign(fx)
    if bracket is None:
        # a step that crossed zero brackets the root it was heading for; other
        # opposite-sign points (e.g. rejected trials) may bracket a different one
        if came_from is not None and ev.signs.get(came_from) == -s:
            return (min(x, came_from), max(x, came_from))
        y = ev.opposite_neighbour(x, s)
        return None if y is None else (min(x, y), max(x, y))
    a, b = bracket
    if not a < x < b:
        return bracket
    return (x, b) if ev.signs.get(a) == s else (a, x)


def _safeguarded(problem: RootProblem, propose, seed_prev: list[float] | None = None) -> RootTrace:
    trace = RootTrace()
    ev = _Evaluator(problem, trace)
    x = float(problem.x0)
    fx = ev(x)
    if fx is None:
        raise OutOfDomainError(f"initial guess x0 = {x!r} is outside the function's domain")
    ev.record(x, fx)
    prev = None
    if seed_prev is not None:
        for cand in seed_prev:
            fp = ev(cand)
            if fp is not None:
                prev = (cand, fp)
                break
        else:
            raise OutOfDomainError(f"no second seed among {list(seed_prev)} is inside the function's domain")
    bracket = None
    if problem.bracket is not None:
        for end in problem.bracket:
            if end not in ev.signs:
                ev(end)
        lo, hi = problem.bracket
        if lo in ev.signs and hi in ev.signs and ev.signs[lo] != ev.signs[hi]:
            bracket = (lo, hi)
    if bracket is None:
        bracket = _update_bracket(None, ev, x, fx)

    for _ in range(problem.max_iter):
        if abs(fx) < problem.tol:
            trace.converged = True
            trace.root = x
            return trace
        x_new = propose(x, fx, prev)
        bisect = False
        if x_new is None or not math.isfinite(x_new):
            if bracket is None:
                raise DerivativeDegenerateError(f"degenerate step at x = {x!r}", trace)
            x_new, bisect = 0.5 * (bracket[0] + bracket[1]), True
        elif bracket is not None and not bracket[0] < x_new < bracket[1]:
            x_new, bisect = 0.5 * (bracket[0] + bracket[1]), True
        delta = x_new - x
        accepted = None
        for k in range(MAX_HALVINGS + 1):
            trial = x + delta / 2**k
            if trial == x:
                break
            ft = ev(trial)
            if ft is None:
                if bracket is None and trial in ev.signs and ev.signs[trial] != _sign(fx):
                    bracket = (min(x, trial), max(x, trial))
                continue
            if bisect or abs(ft) < abs(fx) or _sign(ft) != _sign(fx):
                accepted = (trial, ft)
                break
        if accepted is None:
            raise NoProgressError(f"no acceptable step from x = {x!r} after {MAX_HALVINGS} halvings", trace)
        prev = (x, fx)
        x, fx = accepted
        ev.record(x, fx)
        bracket = _update_bracket(bracket, ev, x, fx, came_from=prev[0])

    if abs(fx) < problem.tol:
        trace.converged = True
        trace.root = x
        return trace
    trace.root = x
    raise NonConvergenceError(f"no convergence in {problem.max_iter} iterations (|f| = {abs(fx):.3e})", trace)


def newton(problem: RootProblem) -> RootTrace:
    """Newton iteration ``x <- x - f(x)/f'(x)`` with the safeguards described above."""
    if problem.fprime is None:
        raise InvalidParameterError("newton needs fprime")

    def propose(x, fx, prev):
        d = float(problem.fprime(x))
        if not math.isfinite(d) or abs(d) * max(1.0, abs(x)) < DERIVATIVE_FLOOR:
            return None
        return x - fx / d

    return _safeguarded(problem, propose)


def secant(problem: RootProblem) -> RootTrace:
    """Secant iteration.

    The second seed is the bracket end farther from ``x0`` when a bracket is
    given and that end is in the domain, otherwise ``x0 (1 + 1e-4)``.
    """
    x0 = float(problem.x0)
    seeds = [x0 * (1.0 + SECANT_OFFSET) if x0 != 0 else SECANT_OFFSET]
    if problem.bracket is not None:
        lo, hi = problem.bracket
        seeds.insert(0, hi if abs(hi - x0) >= abs(lo - x0) else lo)

    def propose(x, fx, prev):
        xp, fp = prev
        if fx == fp:
            return None
        return x - fx * (x - xp) / (fx - fp)

    return _safeguarded(problem, propose, seed_prev=seeds)


def bisection(problem: RootProblem) -> RootTrace:
    """Interval halving on ``problem.bracket``.

    A bracket end may be out of domain only if the error carries the sign
    ``f`` tends to there; an out-of-domain midpoint is an error.
    """
    if problem.bracket is None:
        raise InvalidBracketError("bisection needs a bracket")
    trace = RootTrace()
    ev = _Evaluator(problem, trace)
    lo, hi = (float(v) for v in problem.bracket)
    flo, fhi = ev(lo), ev(hi)
    slo, shi = ev.signs.get(lo), ev.signs.get(hi)
    for end, fv in ((lo, flo), (hi, fhi)):
        if fv is not None and abs(fv) < problem.tol:
            ev.record(end, fv)
            trace.converged, trace.root = True, end
            return trace
    if slo is None or shi is None or slo == shi:
        raise InvalidBracketError(f"f does not change sign on [{lo}, {hi}]", trace)
    best = None
    for _ in range(problem.max_iter):
        mid = 0.5 * (lo + hi)
        fm = ev(mid)
        if fm is None:
            raise NoProgressError(f"out-of-domain evaluation at {mid!r} inside the bracket", trace)
        ev.record(mid, fm)
        if best is None or abs(fm) < abs(best[1]):
            best = (mid, fm)
        if abs(fm) < problem.tol:
            trace.converged, trace.root = True, mid
            return trace
        if hi - lo < problem.tol * max(1.0, abs(mid)):
            break
        if _sign(fm) == slo:
            lo = mid
        else:
            hi = mid
    trace.root = best[0]
    raise NonConvergenceError(f"bisection stopped with |f| = {abs(best[1]):.3e}", trace)
