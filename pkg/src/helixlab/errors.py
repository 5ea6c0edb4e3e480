"""Exception hierarchy shared by all helixlab modules."""


class HelixlabError(Exception):
    """Base class for every error raised by helixlab."""


class ParameterError(HelixlabError, ValueError):
    """A scalar parameter is outside its admissible range."""


class DomainError(HelixlabError, ValueError):
    """A point or region lies outside the domain of definition."""


class PoleError(DomainError):
    """Evaluation requested at a pole of a meromorphic/harmonic function."""


class OutOfDomainError(DomainError):
    """A stencil or curve leaves the gridded domain."""


class UnsupportedMetricError(HelixlabError, ValueError):
    """The requested operation is not defined for this metric."""


class WrongOperationError(HelixlabError, ValueError):
    """The call should have been routed to a different operation."""


class SolverError(HelixlabError, RuntimeError):
    """The linear algebra inside a nonlinear solve broke down."""


class ConvergenceError(HelixlabError, RuntimeError):
    """An iteration did not reach its tolerance within the allowed budget."""

    def __init__(self, message, last_residual=float("nan"), iterations=0):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class ToleranceError(ConvergenceError):
    """A quadrature refinement did not reach its agreement tolerance."""


class HypothesisError(HelixlabError, ValueError):
    """A hypothesis of an inequality check is violated.

    ``item`` names the failed hypothesis so reports can point at it.
    """

    def __init__(self, message, item):
        super().__init__(message)
        self.item = item


class ContractViolation(HelixlabError, ValueError):
    """Inputs violate an operation's precondition (e.g. an open curve)."""


class ConfigError(HelixlabError, ValueError):
    """Invalid experiment configuration; ``path`` is the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
