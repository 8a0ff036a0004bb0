"""Exception and warning classes shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class InputError(ValueError):
    """A file, trace or stream could not be used as given."""


class StateError(RuntimeError):
    """An operation was called on an object in the wrong state."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class DomainWarning(UserWarning):
    """An iterate left the ball on which loss constants are certified."""
