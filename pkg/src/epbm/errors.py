"""Exception types shared across the package.

Plain ValueError is used for bad scalar/array arguments (parameter errors);
the classes below cover the structured failure modes that callers are
expected to catch and map to exit codes.
"""


class ConfigurationError(ValueError):
    """A method or experiment specification is internally inconsistent."""


class CapacityError(ValueError):
    """An input exceeds a desk-scale guard (for example a dense matrix too large)."""


class KrylovConvergenceError(RuntimeError):
    """The Arnoldi projection did not reach the requested tolerance.

    Attributes:
        residual: best relative residual estimate achieved.
        dimension: subspace dimension at which the iteration stopped.
    """

    def __init__(self, message, residual=None, dimension=None):
        super().__init__(message)
        self.residual = residual
        self.dimension = dimension


class DivergenceError(RuntimeError):
    """A time-stepping run produced a non-finite or absurdly large state.

    Attributes:
        step: index of the offending step, when known (run loops fill it in).
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DeterminismError(RuntimeError):
    """Identical runs with different worker counts disagreed bitwise."""
