"""Shared sampler plumbing.

All samplers consume a *target* object with this duck-typed surface:

- ``dim`` — number of sampling coordinates,
- ``name`` — short label used in chain metadata,
- ``log_prob(x)`` — log posterior density at ``x`` (may be ``-inf``),
- ``value_and_grad(x)`` — density and its gradient (gradient-based samplers),
- ``draw_init(rng)`` — a prior-distributed starting point,
- ``to_original(x)`` / ``to_original_batch(m)`` — map sampling coordinates
  back to reporting coordinates,
- ``eval_count`` — cumulative number of forward-model evaluations.

:class:`~bayescal.inference.UnconstrainedTarget` provides all of it for the
physics posteriors; :class:`AnalyticTarget` below provides the same surface
for closed-form densities used in tests and calibration experiments.
"""
from __future__ import annotations

import numpy as np

from ..errors import EvaluationError, ValidationError
from ..inference import EvalCounter

__all__ = ["AnalyticTarget", "draw_start"]


class AnalyticTarget:
    """Adapter giving a plain ``f(x) -> float`` the full target surface.

    Parameters
    ----------
    dim:
        Number of coordinates.
    log_prob_fn:
        Callable returning the log density (``-inf`` allowed outside support).
    grad_fn:
        Optional callable returning the gradient; required only by
        gradient-based samplers.
    init_fn:
        Optional ``init_fn(rng) -> ndarray`` drawing a starting point;
        defaults to a standard normal draw.
    params:
        Coordinate names; default ``x0, x1, ...``.
    """

    def __init__(self, dim, log_prob_fn, grad_fn=None, init_fn=None,
                 params=None, name="analytic"):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValidationError("target dimension must be >= 1")
        self._fn = log_prob_fn
        self._grad = grad_fn
        self._init = init_fn
        self.name = name
        self.params = tuple(params) if params is not None else tuple(
            f"x{i}" for i in range(self.dim))
        if len(self.params) != self.dim:
            raise ValidationError("one parameter name per coordinate required")
        self.counter = EvalCounter()

    @property
    def eval_count(self) -> int:
        return self.counter.count

    def log_prob(self, x) -> float:
        x = np.asarray(x, dtype=float)
        self.counter.add(1)
        return float(self._fn(x))

    def value_and_grad(self, x):
        if self._grad is None:
            raise ValidationError(f"target {self.name!r} has no gradient")
        x = np.asarray(x, dtype=float)
        self.counter.add(1)
        val = float(self._fn(x))
        if not np.isfinite(val):
            return val, np.zeros(self.dim)
        return val, np.asarray(self._grad(x), dtype=float)

    def draw_init(self, rng) -> np.ndarray:
        if self._init is not None:
            x = np.asarray(self._init(rng), dtype=float)
            if x.shape != (self.dim,):
                raise ValidationError(f"init_fn must return shape ({self.dim},)")
            return x
        return rng.standard_normal(self.dim)

    def to_original(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    def to_original_batch(self, m) -> np.ndarray:
        return np.asarray(m, dtype=float).copy()


def draw_start(target, rng, init=None, max_tries: int = 100):
    """Starting state with a finite log density, retrying prior draws.

    Returns ``(x, log_prob)``.  An explicit ``init`` is used as-is and must
    have finite density.
    """
    if init is not None:
        x = np.asarray(init, dtype=float)
        if x.shape != (target.dim,):
            raise ValidationError(
                f"initial state must have shape ({target.dim},), got {x.shape}")
        lp = target.log_prob(x)
        if not np.isfinite(lp):
            raise EvaluationError("supplied initial state has non-finite log density")
        return x, lp
    for _ in range(max_tries):
        x = target.draw_init(rng)
        lp = target.log_prob(x)
        if np.isfinite(lp):
            return x, lp
    raise EvaluationError(
        f"no finite-density starting point in {max_tries} prior draws")
