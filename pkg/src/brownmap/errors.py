"""Exception types shared across modules."""

__all__ = ["NumericalError", "ConvergenceError"]


class NumericalError(RuntimeError):
    """A computation could not produce a trustworthy value."""


class ConvergenceError(NumericalError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Last residual seen by the solver.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, "
                         f"iterations={iterations})")
        self.residual = residual
        self.iterations = iterations
