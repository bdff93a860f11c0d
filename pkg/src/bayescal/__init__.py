"""Benchmarking toolkit for Bayesian calibration of constitutive models.

Layers, bottom up:

- :mod:`bayescal.autodiff` — forward-mode derivatives via dual numbers,
- :mod:`bayescal.probability` — prior distribution families,
- :mod:`bayescal.models` — transient heat-conduction and squeeze-flow
  forward models with built-in parameter derivatives,
- :mod:`bayescal.inference` — priors, transforms, posterior targets, and
  model-evaluation accounting,
- :mod:`bayescal.systems` — the packaged calibration problems,
- :mod:`bayescal.samplers` — Metropolis, ensemble, and No-U-Turn samplers
  over a shared chain format,
- :mod:`bayescal.diagnostics` — burn-in, effective sample size,
  between-chain scale reduction, and binned KL benchmarking,
- :mod:`bayescal.harness` — config-driven campaigns and the ``bayescal``
  command-line interface.
"""

from .errors import (BayescalError, ConfigError, ConvergenceError,
                     EvaluationError, ValidationError)

__all__ = [
    "BayescalError",
    "ConfigError",
    "ConvergenceError",
    "EvaluationError",
    "ValidationError",
    "__version__",
]

__version__ = "0.1.0"
