"""Exception types shared across the package.

Domain errors (bad dimensions, out-of-range letters, violated preconditions)
raise plain ValueError; these classes cover the numerical failure modes of the
fixed-point recursions.
"""


class ConvergenceError(RuntimeError):
    """A fixed-point iteration hit max_iter before reaching tolerance.

    Attributes:
        residual: last Frobenius residual.
        iterations: iterations performed.
        history: tail of the residual sequence (most recent last).
    """

    def __init__(self, message, residual, iterations, history=None):
        super().__init__(message)
        self.residual = float(residual)
        self.iterations = int(iterations)
        self.history = list(history) if history is not None else []


class NoiseDegeneracyError(RuntimeError):
    """An innovation covariance lost positive definiteness mid-recursion.

    Attributes:
        sigma: 1-based scheduling index of the failing covariance block.
        iteration: iteration at which the floor was crossed.
        min_eigenvalue: offending eigenvalue.
    """

    def __init__(self, message, sigma, iteration, min_eigenvalue):
        super().__init__(message)
        self.sigma = int(sigma)
        self.iteration = int(iteration)
        self.min_eigenvalue = float(min_eigenvalue)
