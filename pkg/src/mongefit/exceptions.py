"""Exception types shared across the package.

The split mirrors the CLI exit-code taxonomy: usage errors are the
caller's fault (bad shapes, infeasible options), numerical errors are
failures of the solvers on legal input.
"""


class UsageError(ValueError):
    """Invalid input or precondition violation by the caller."""


class NumericalError(RuntimeError):
    """A numerical procedure failed on otherwise legal input."""


class NotStronglyConvexError(NumericalError):
    """Conjugation or inversion requested for a potential without a
    positive strong-convexity certificate."""


class RankDeficiencyError(NumericalError):
    """A covariance matrix is singular or nearly so; regularization
    (e.g. a small ridge) is required to proceed."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap before reaching the
    requested tolerance.

    Attributes
    ----------
    last_iterate : ndarray
        The final iterate reached before giving up.
    residual : float
        Gradient residual at the final iterate.
    index : int or None
        For batched solves, the index of the first failing query.
    """

    def __init__(self, message, last_iterate=None, residual=None, index=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.index = index
