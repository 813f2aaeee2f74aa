"""Exception types shared across the package."""


class VardpError(Exception):
    """Base class for all package errors."""


class ParameterError(VardpError, ValueError):
    """A constructor or operation argument is outside its admissible range."""


class DomainError(VardpError, ValueError):
    """A discount function was evaluated outside [0, inf)."""


class FeasibilityError(VardpError, ValueError):
    """An action is not feasible at the given state."""


class AssumptionError(VardpError, ValueError):
    """A structural assumption (uniform feasibility, modulus validity) is violated."""


class NotContractiveError(VardpError, ValueError):
    """The estimated transition contraction factor is >= 1."""


class StructuralError(VardpError, ValueError):
    """A graph or process lacks required structure (e.g. no cycle reachable)."""


class CalibrationError(VardpError, ValueError):
    """A (value, function) pair does not satisfy the calibrated equation within tolerance."""


class ConfigError(VardpError, ValueError):
    """A config document cannot be translated into solver objects."""


class ConvergenceError(VardpError, RuntimeError):
    """Fixed-point iteration exhausted its budget.

    Carries the residual trace accumulated so far in ``trace``
    (list of (iteration, update, certificate) rows).
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class LimitUnstableError(VardpError, RuntimeError):
    """The vanishing-discount value sequence is not Cauchy on the given schedule.

    Carries the full per-schedule value sequence in ``sequence``.
    """

    def __init__(self, message, sequence=None):
        super().__init__(message)
        self.sequence = sequence if sequence is not None else []
