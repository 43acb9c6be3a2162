"""Exception hierarchy shared by the integrator, model, root finders and solver."""

from __future__ import annotations


class ITMError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(ITMError, ValueError):
    """A configuration or physical parameter is outside its admissible range."""


class UnsupportedConfigurationError(ITMError):
    """The requested combination of options has no implementation."""


class OutOfDomainError(ITMError):
    """A function evaluation fell outside the domain where it is defined.

    Root finders treat this as recoverable. ``sign`` is the sign the function
    tends to at the edge of its domain when that is known (``+1`` or ``-1``),
    otherwise ``None``; bracketing methods may use a signed out-of-domain point
    as a bracket end.
    """

    def __init__(self, message: str, sign: int | None = None):
        super().__init__(message)
        self.sign = sign


class DomainError(OutOfDomainError):
    """Argument outside the real domain, e.g. a fractional power of h* <= 0."""


class RescaleUndefinedError(OutOfDomainError):
    """The group parameter would be non-real (square root of a non-positive number)."""


class ReversedFlowError(OutOfDomainError):
    """The star profile reverses direction on the far side of the dual-branch root.

    For beta > 0, Gamma has a second zero at smaller h* whose profile has a
    negative-velocity region. Points beyond it (Gamma < 0 with a negative
    interior slope) carry ``sign = +1`` so that the physical root is the only
    place where the reported sign changes from + to -.
    """


class BlowUpError(OutOfDomainError):
    """Integration produced a non-finite state or one beyond the magnitude cap.

    Attributes:
        eta: last abscissa where the state was still finite.
        state: the last finite state.
    """

    def __init__(self, eta: float, state=None):
        super().__init__(f"solution blew up after eta = {eta:.6g}")
        self.eta = eta
        self.state = state


class IntegrationBudgetError(ITMError):
    """The integrator needed more steps than ``max_steps`` allows."""

    def __init__(self, steps: int, eta: float):
        super().__init__(f"step budget of {steps} exhausted at eta = {eta:.6g}")
        self.steps = steps
        self.eta = eta


class RootFindingError(ITMError):
    """Base class for root-finder failures; ``trace`` holds the iterations done so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NonConvergenceError(RootFindingError):
    pass


class DerivativeDegenerateError(RootFindingError):
    pass


class NoProgressError(RootFindingError):
    pass


class InvalidBracketError(RootFindingError):
    pass
