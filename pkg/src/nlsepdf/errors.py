"""Exception types shared across the toolkit."""


class GuardViolation(ValueError):
    """A documented precondition or validity guard was violated.

    `guard` names the violated guard so batch front-ends can surface it.
    """

    def __init__(self, guard: str, message: str):
        super().__init__(f"{guard}: {message}")
        self.guard = guard


class EstimateError(RuntimeError):
    """A Monte-Carlo estimate degenerated (e.g. all weights underflowed)."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to reach the requested tolerance.

    Carries whatever diagnostic the method accumulated (residual history,
    achieved tolerance) so the failure is reportable, not silent.
    """

    def __init__(self, message: str, *, achieved: float | None = None,
                 history: tuple = ()):
        super().__init__(message)
        self.achieved = achieved
        self.history = tuple(history)


class QuadratureError(ConvergenceError):
    """Deterministic quadrature did not converge below the requested tolerance."""
