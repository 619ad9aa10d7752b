"""Exception types shared across the package."""


class SglabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SglabError):
    """Invalid run configuration (bad flag value, malformed grid spec, ...)."""


class ResourceLimitError(SglabError):
    """A size cap would be exceeded (problem dimension, dense matrix, ...)."""


class ParameterRegimeError(SglabError):
    """An analytic construction was requested outside its validity regime.

    The message names the inequality that failed; callers are expected to
    surface it verbatim rather than clamp parameters.
    """


class ConvergenceError(SglabError):
    """An iterative solver ran out of restarts.

    Carries the best residual norms seen so far for diagnostics.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals
