"""Affine-invariant ensemble sampler using the stretch move.

An ensemble of ``K`` walkers advances in rounds.  Within a round each walker
``k`` (in index order) picks a uniformly random *other* walker ``j`` at its
latest state, draws a stretch factor

    z = (u * (sqrt(a) - 1/sqrt(a)) + 1/sqrt(a)) ** 2,   u ~ Uniform[0, 1)

with default ``a = 2``, proposes ``z * x_k + (1 - z) * x_j`` and accepts with
probability ``min(1, z**(dim-1) * pi(proposal) / pi(x_k))``.  The run records
one row per round per walker; the total sample budget must divide evenly
into rounds and the ensemble needs at least ``dim + 2`` walkers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .base import draw_start
from .chain import Chain

__all__ = ["AISMConfig", "aism_run", "stretch_draw",
           "ensemble_average", "flatten_walkers"]


@dataclass(frozen=True)
class AISMConfig:
    n_samples: int
    walkers: int
    stretch: float = 2.0

    def __post_init__(self):
        if self.walkers < 2:
            raise ValidationError("ensemble needs at least 2 walkers")
        if self.stretch <= 1.0:
            raise ValidationError("stretch parameter must be > 1")
        if self.n_samples < 2 * self.walkers:
            raise ValidationError("need at least 2 rounds of samples")
        if self.n_samples % self.walkers != 0:
            raise ValidationError(
                f"n_samples={self.n_samples} must be divisible by walkers={self.walkers}")


def _stretch_from_uniform(a: float, u) -> float:
    root = np.sqrt(a)
    return (u * (root - 1.0 / root) + 1.0 / root) ** 2


def stretch_draw(a: float, rng) -> float:
    """One stretch factor ``z`` on ``[1/a, a]`` with density proportional to
    ``1/sqrt(z)``."""
    if a <= 1.0:
        raise ValidationError("stretch parameter must be > 1")
    return float(_stretch_from_uniform(a, rng.uniform()))


def aism_run(target, config: AISMConfig, rng, min_walkers: int | None = None) -> list[Chain]:
    """Run the ensemble; returns one chain per walker (row = round).

    ``min_walkers`` exists for calibration experiments on low-dimensional
    analytic targets; production use keeps the default ``dim + 2`` floor.
    """
    p = target.dim
    floor = p + 2 if min_walkers is None else min_walkers
    k = config.walkers
    if k < floor:
        raise ValidationError(
            f"ensemble of {k} walkers cannot span dimension {p}; need >= {floor}")
    rounds = config.n_samples // k
    a = config.stretch

    xs = np.empty((k, p))
    lps = np.empty(k)
    states = np.empty((rounds, k, p))
    log_post = np.empty((rounds, k))
    cum = np.empty((rounds, k), dtype=np.int64)
    for w in range(k):
        xs[w], lps[w] = draw_start(target, rng)
        cum[0, w] = target.eval_count
    states[0], log_post[0] = xs, lps
    accepted = 0

    for r in range(1, rounds):
        for w in range(k):
            j = int(rng.integers(k - 1))
            if j >= w:
                j += 1
            z = _stretch_from_uniform(a, rng.uniform())
            prop = z * xs[w] + (1.0 - z) * xs[j]
            lp_prop = target.log_prob(prop)
            log_ratio = (p - 1) * np.log(z) + lp_prop - lps[w]
            u = rng.uniform()
            if np.isfinite(lp_prop) and np.exp(min(0.0, log_ratio)) >= u:
                xs[w], lps[w] = prop, lp_prop
                accepted += 1
            cum[r, w] = target.eval_count
        states[r], log_post[r] = xs, lps

    accept_rate = accepted / ((rounds - 1) * k) if rounds > 1 else 0.0
    chains = []
    for w in range(k):
        chains.append(Chain(
            params=tuple(target.params),
            states=target.to_original_batch(states[:, w]),
            log_post=log_post[:, w],
            cum_evals=cum[:, w],
            sampler="aism",
            walkers=1,
            meta={"walker_index": w, "ensemble_size": k,
                  "stretch": a, "accept_rate": accept_rate},
        ))
    return chains


def _common_layout(chains: list[Chain]):
    if not chains:
        raise ValidationError("need at least one walker chain")
    n, params = chains[0].n, chains[0].params
    for c in chains[1:]:
        if c.n != n or c.params != params:
            raise ValidationError("walker chains must share length and parameters")
    return n, params


def ensemble_average(chains: list[Chain]) -> Chain:
    """Per-round walker-mean chain (one row per round).

    Scalar diagnostics on this chain describe the ensemble mean, whose
    sampling variance is reduced by the walker count; the ``walkers`` field
    carries that count so variance-based diagnostics can rescale.
    """
    n, params = _common_layout(chains)
    k = len(chains)
    states = np.mean([c.states for c in chains], axis=0)
    log_post = np.mean([c.log_post for c in chains], axis=0)
    cum = np.max([c.cum_evals for c in chains], axis=0)
    return Chain(params=params, states=states, log_post=log_post,
                 cum_evals=cum, sampler="aism", walkers=k,
                 meta={"ensemble_average": True, "ensemble_size": k})


def flatten_walkers(chains: list[Chain]) -> Chain:
    """Interleave walker rows in chronological (round, walker) order."""
    n, params = _common_layout(chains)
    k = len(chains)
    p = len(params)
    states = np.empty((n * k, p))
    log_post = np.empty(n * k)
    cum = np.empty(n * k, dtype=np.int64)
    for w, c in enumerate(chains):
        states[w::k] = c.states
        log_post[w::k] = c.log_post
        cum[w::k] = c.cum_evals
    return Chain(params=params, states=states, log_post=log_post,
                 cum_evals=cum, sampler="aism", walkers=k,
                 meta={"flattened": True, "ensemble_size": k})
