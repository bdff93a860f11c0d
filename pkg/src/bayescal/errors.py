"""Exception taxonomy shared across the package.

All deliberate failures derive from :class:`BayescalError`; four concrete
classes, kept deliberately coarse:

* :class:`ValidationError` -- malformed inputs (bad shapes, non-ascending
  times, non-SPD covariances, out-of-support values).
* :class:`EvaluationError` -- a forward-model or density evaluation that
  started but could not finish (integrator blow-up, underflowed reference
  probabilities).
* :class:`ConvergenceError` -- a diagnostic that cannot reach a decision
  (no admissible burn-in, persistent divergences).
* :class:`ConfigError` -- run-configuration problems; messages carry the
  offending key path.
"""


class BayescalError(Exception):
    """Common base of every exception this package raises deliberately."""


class ValidationError(BayescalError, ValueError):
    """Raised when an input violates a documented precondition."""


class EvaluationError(BayescalError, RuntimeError):
    """Raised when a model or density evaluation fails mid-flight."""


class ConvergenceError(BayescalError, RuntimeError):
    """Raised when an iterative diagnostic or run cannot converge."""


class ConfigError(BayescalError, ValueError):
    """Raised for schema or value errors in run-configuration files."""
