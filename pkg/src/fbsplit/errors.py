"""Exceptions shared across the solvers and the benchmark harness."""


class ConfigurationError(ValueError):
    """Raised when parameters violate a method's admissible range."""


class DivergenceError(RuntimeError):
    """Raised when an iterate leaves the set of finite vectors.

    Carries the last fully finite state on the ``state`` attribute so a
    caller can inspect or log the partial run.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
