"""Random-walk Metropolis with an adaptive covariance warm-up.

``mh_adapt`` runs the Haario-style adaptive phase: proposals use a scaled
running sample covariance (scale ``2.38**2 / dim`` with a small diagonal
regularizer), fixed for an initial window of ``10 * dim`` steps and updated
every step afterwards.  It returns the final proposal covariance, which is
then frozen for the measured :func:`mh_run` phase so the recorded chain is a
time-homogeneous Markov chain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .base import draw_start
from .chain import Chain

__all__ = ["MHConfig", "mh_run", "mh_adapt"]

_REGULARIZER = 1e-10


@dataclass(frozen=True)
class MHConfig:
    n_samples: int
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cov", np.array(self.cov, dtype=float))
        if self.n_samples < 2:
            raise ValidationError("n_samples must be >= 2")
        c = self.cov
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError("proposal covariance must be a square matrix")
        if not np.allclose(c, c.T):
            raise ValidationError("proposal covariance must be symmetric")


def _proposal_chol(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValidationError("proposal covariance is not positive definite") from exc


def mh_run(target, config: MHConfig, rng, init=None) -> Chain:
    """Metropolis chain of ``config.n_samples`` states (row 0 = start)."""
    p = target.dim
    if config.cov.shape != (p, p):
        raise ValidationError(
            f"proposal covariance is {config.cov.shape}, target dimension is {p}")
    chol = _proposal_chol(config.cov)
    n = config.n_samples

    x, lp = draw_start(target, rng, init)
    states = np.empty((n, p))
    log_post = np.empty(n)
    cum = np.empty(n, dtype=np.int64)
    states[0], log_post[0], cum[0] = x, lp, target.eval_count
    accepted = 0

    for i in range(1, n):
        prop = x + chol @ rng.standard_normal(p)
        lp_prop = target.log_prob(prop)
        u = rng.uniform()
        # accept with probability min(1, ratio); "ratio >= u" so equal
        # densities always accept (u < 1 almost surely)
        if np.isfinite(lp_prop) and np.exp(min(0.0, lp_prop - lp)) >= u:
            x, lp = prop, lp_prop
            accepted += 1
        states[i], log_post[i], cum[i] = x, lp, target.eval_count

    return Chain(
        params=tuple(target.params),
        states=target.to_original_batch(states),
        log_post=log_post,
        cum_evals=cum,
        sampler="mh",
        meta={"accept_rate": accepted / (n - 1),
              "proposal_cov": config.cov},
    )


def mh_adapt(target, n_adapt: int, rng, init=None,
             initial_scale: float = 0.1) -> np.ndarray:
    """Adaptive warm-up; returns the tuned proposal covariance.

    The proposal covariance is ``s_d * (running sample covariance + 1e-10 I)``
    with ``s_d = 2.38**2 / dim``.  For the first ``10 * dim`` steps (while the
    sample covariance is still rank-deficient) an isotropic
    ``s_d * initial_scale**2 * I`` proposal is used instead.
    """
    p = target.dim
    if n_adapt < 100 * p:
        raise ValidationError(
            f"adaptation needs at least {100 * p} steps for dimension {p}, got {n_adapt}")
    s_d = 2.38 ** 2 / p
    eye = np.eye(p)
    cov0 = initial_scale ** 2 * eye

    x, lp = draw_start(target, rng, init)
    mean = x.copy()
    scatter = np.zeros((p, p))
    count = 1

    for i in range(1, n_adapt):
        if count <= 10 * p:
            cov = cov0
        else:
            cov = scatter / (count - 1) + _REGULARIZER * eye
        prop = x + _proposal_chol(s_d * cov) @ rng.standard_normal(p)
        lp_prop = target.log_prob(prop)
        u = rng.uniform()
        if np.isfinite(lp_prop) and np.exp(min(0.0, lp_prop - lp)) >= u:
            x, lp = prop, lp_prop
        delta = x - mean
        mean += delta / (count + 1)
        scatter += np.outer(delta, x - mean)
        count += 1

    return s_d * (scatter / (count - 1) + _REGULARIZER * eye)
