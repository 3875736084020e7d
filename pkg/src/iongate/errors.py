"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit 2,
physics precondition violations exit 3, numeric failures exit 4.
"""


class IonGateError(Exception):
    """Base class for all library errors."""


class ConfigError(IonGateError, ValueError):
    """An experiment configuration failed schema validation."""


class PreconditionError(IonGateError, ValueError):
    """A physics precondition of an operation is violated."""


class DimensionError(PreconditionError):
    """Operands have incompatible dimensions, or a space exceeds the size cap."""


class LeakageError(PreconditionError):
    """A displacement would push population against the Fock truncation."""


class ConvergenceError(IonGateError, RuntimeError):
    """A numeric procedure did not reach its accuracy target."""


class StepSizeError(ConvergenceError):
    """The integrator's embedded error estimate exceeded tolerance."""
