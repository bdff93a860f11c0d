"""No-U-Turn sampler with step-size and diagonal-metric adaptation.

Each step draws a Gaussian momentum under the current diagonal metric,
then doubles a leapfrog trajectory in a random direction until the
generalized U-turn criterion fires (the trajectory's summed momentum
loses positive projection on an end velocity) or a leaf diverges (joint
log density drops by more than 1000).  The next state is drawn from the
trajectory's leaves in proportion to their joint densities: within a
subtree by multinomial reservoir swaps, and across doublings by the
biased progressive rule ``min(1, w_new / w_old)`` that favours the fresh
half of the trajectory.

Warm-up covers the first ``adapt_steps`` transitions (default
``min(n_samples // 2, 1000)``) and is recorded as the chain's burn-in
offset.  Step size is tuned by dual averaging toward ``target_accept``,
starting from a coarse doubling/halving search.  When the warm-up span is
long enough, expanding memoryless windows (75 initial steps excluded,
then 25, 50, 100, ... step windows, the last 50 steps reserved) estimate
the posterior's marginal variances, which become the kinetic metric's
inverse diagonal; each window refresh restarts the step-size search under
the new metric.  A rolling window of the last 100 steps aborts the run
with :class:`~bayescal.errors.ConvergenceError` if more than half of them
diverged.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, ValidationError
from .base import draw_start
from .chain import Chain

__all__ = ["NUTSConfig", "nuts_run", "leapfrog"]

DELTA_MAX = 1000.0

_DA_GAMMA = 0.05
_DA_T0 = 10.0
_DA_KAPPA = 0.75

_DIVERGENCE_WINDOW = 100
_DIVERGENCE_LIMIT = 50

_METRIC_INIT_BUFFER = 75
_METRIC_TERM_BUFFER = 50
_METRIC_BASE_WINDOW = 25


@dataclass(frozen=True)
class NUTSConfig:
    n_samples: int
    target_accept: float = 0.8
    max_depth: int = 10
    adapt_steps: int | None = None
    step_size: float | None = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValidationError("n_samples must be >= 2")
        if not 0.0 < self.target_accept < 1.0:
            raise ValidationError("target_accept must lie in (0, 1)")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1")
        if self.adapt_steps is not None and not (
                0 <= self.adapt_steps < self.n_samples):
            raise ValidationError("adapt_steps must lie in [0, n_samples)")
        if self.step_size is not None and not self.step_size > 0:
            raise ValidationError("step_size must be positive")


def leapfrog(target, position, momentum, step_size, n_steps, inv_mass=None):
    """Integrate Hamiltonian dynamics; returns ``(position, momentum)``.

    ``step_size`` is a positive scalar and ``n_steps`` a non-negative step
    count.  ``inv_mass`` is the diagonal of the inverse mass matrix (unit
    metric when omitted).  Uses ``n_steps + 1`` gradient evaluations (one
    to start).
    """
    x = np.asarray(position, dtype=float).copy()
    r = np.asarray(momentum, dtype=float).copy()
    if x.shape != (target.dim,) or r.shape != (target.dim,):
        raise ValidationError(
            f"position and momentum must have shape ({target.dim},)")
    eps = float(step_size)
    if not eps > 0:
        raise ValidationError("step_size must be positive")
    n_steps = int(n_steps)
    if n_steps < 0:
        raise ValidationError("n_steps must be >= 0")
    if inv_mass is None:
        inv_mass = np.ones(target.dim)
    else:
        inv_mass = np.asarray(inv_mass, dtype=float)
        if inv_mass.shape != (target.dim,) or not np.all(inv_mass > 0.0):
            raise ValidationError(
                f"inv_mass must be ({target.dim},) positive entries")
    _, grad = target.value_and_grad(x)
    for _ in range(n_steps):
        x, r, _, grad = _leapfrog_step(target, x, r, grad, eps, inv_mass)
    return x, r


def _leapfrog_step(target, x, r, grad, eps, inv_mass):
    """One leapfrog update; exactly one model evaluation."""
    r_half = r + 0.5 * eps * grad
    x_new = x + eps * (inv_mass * r_half)
    lp_new, grad_new = target.value_and_grad(x_new)
    r_new = r_half + 0.5 * eps * grad_new
    return x_new, r_new, lp_new, grad_new


def _joint(lp, r, inv_mass):
    val = lp - 0.5 * float(r @ (inv_mass * r))
    return val if np.isfinite(val) else -np.inf


def _no_uturn(rho, r_minus, r_plus, inv_mass) -> bool:
    """Generalized criterion on the trajectory's momentum sum ``rho``:
    keep integrating while the summed momentum has positive projection on
    the velocity at both ends."""
    return (bool(rho @ (inv_mass * r_minus) > 0.0)
            and bool(rho @ (inv_mass * r_plus) > 0.0))


def _draw_momentum(rng, inv_mass):
    return rng.standard_normal(inv_mass.shape[0]) / np.sqrt(inv_mass)


def _find_reasonable_epsilon(target, rng, x, lp, grad,
                             inv_mass) -> tuple[float, int]:
    """Coarse step size: doubled/halved until the one-step acceptance
    probability crosses 1/2.  Returns ``(step_size, leapfrogs_used)``."""
    eps = 1.0
    r0 = _draw_momentum(rng, inv_mass)
    joint0 = _joint(lp, r0, inv_mass)
    _, r1, lp1, _ = _leapfrog_step(target, x, r0, grad, eps, inv_mass)
    used = 1
    log_ratio = _joint(lp1, r1, inv_mass) - joint0
    a = 1.0 if log_ratio > math.log(0.5) else -1.0
    while a * log_ratio > -a * math.log(2.0):
        eps *= 2.0 ** a
        if used > 60:
            raise ConvergenceError(
                "no reasonable initial step size found within 60 doublings")
        _, r1, lp1, _ = _leapfrog_step(target, x, r0, grad, eps, inv_mass)
        used += 1
        log_ratio = _joint(lp1, r1, inv_mass) - joint0
    return eps, used


def _metric_window_ends(n_adapt: int) -> list[int]:
    """Steps (1-based) at which the diagonal metric is re-estimated.

    Expanding doubling windows between an initial step-size-only buffer and
    a terminal one; the last window absorbs any remainder that could not
    hold a further doubling.  Empty when the warm-up span is too short.
    """
    last = n_adapt - _METRIC_TERM_BUFFER
    if n_adapt < _METRIC_INIT_BUFFER + _METRIC_BASE_WINDOW + _METRIC_TERM_BUFFER:
        return []
    ends = []
    start = _METRIC_INIT_BUFFER
    size = _METRIC_BASE_WINDOW
    while start + size <= last:
        end = last if start + 3 * size > last else start + size
        ends.append(end)
        start = end
        size *= 2
    return ends


class _RunningMoments:
    """Welford accumulator for per-coordinate means and variances."""

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def add(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def regularized_variance(self) -> np.ndarray:
        """Shrunk toward 1e-3 the way short warm-up windows demand."""
        var = self.m2 / max(self.n - 1, 1)
        w = self.n / (self.n + 5.0)
        var = w * var + (1.0 - w) * 1e-3
        return np.where(np.isfinite(var) & (var > 0.0), var, 1e-3)


def _build_tree(target, rng, x, r, grad, v, depth, eps, joint0, inv_mass):
    """Doubling recursion.

    Returns ``(x_minus, r_minus, g_minus, x_plus, r_plus, g_plus,
    x_prop, lp_prop, log_weight, rho, valid, alpha_sum, n_alpha,
    diverged, leapfrogs)``.  ``log_weight`` is the log-sum of leaf joint
    densities relative to ``joint0`` and ``rho`` the sum of leaf momenta;
    a subtree is ``valid`` when no leaf diverged and no internal
    sub-trajectory made a U-turn, and only then may the caller use its
    proposal.
    """
    if depth == 0:
        x2, r2, lp2, g2 = _leapfrog_step(target, x, r, grad, v * eps,
                                         inv_mass)
        joint = _joint(lp2, r2, inv_mass)
        log_w = joint - joint0
        diverged = (joint0 - joint) > DELTA_MAX
        alpha = math.exp(min(0.0, joint - joint0))
        return (x2, r2, g2, x2, r2, g2, x2, lp2,
                log_w, r2.copy(), not diverged, alpha, 1, diverged, 1)

    (xm, rm, gm, xp, rp, gp, xq, lq,
     lw, rho, valid, alpha, n_alpha, diverged, leaps) = _build_tree(
        target, rng, x, r, grad, v, depth - 1, eps, joint0, inv_mass)
    if valid:
        if v == -1:
            (xm, rm, gm, _, _, _, xq2, lq2,
             lw2, rho2, valid2, a2, na2, d2, l2) = _build_tree(
                target, rng, xm, rm, gm, v, depth - 1, eps, joint0, inv_mass)
        else:
            (_, _, _, xp, rp, gp, xq2, lq2,
             lw2, rho2, valid2, a2, na2, d2, l2) = _build_tree(
                target, rng, xp, rp, gp, v, depth - 1, eps, joint0, inv_mass)
        lw_total = float(np.logaddexp(lw, lw2))
        rho = rho + rho2
        if valid2:
            # multinomial draw between the two halves
            if rng.uniform() < math.exp(min(0.0, lw2 - lw_total)):
                xq, lq = xq2, lq2
            valid = _no_uturn(rho, rm, rp, inv_mass)
        else:
            valid = False
        lw = lw_total
        alpha += a2
        n_alpha += na2
        diverged = diverged or d2
        leaps += l2
    return (xm, rm, gm, xp, rp, gp, xq, lq,
            lw, rho, valid, alpha, n_alpha, diverged, leaps)


def nuts_run(target, config: NUTSConfig, rng, init=None) -> Chain:
    """No-U-Turn chain of ``config.n_samples`` states (row 0 = start)."""
    p = target.dim
    n = config.n_samples
    n_adapt = config.adapt_steps
    if n_adapt is None:
        n_adapt = min(n // 2, 1000)
    delta = config.target_accept

    x, lp = draw_start(target, rng, init)
    lp, grad = target.value_and_grad(x)

    inv_mass = np.ones(p)
    window_ends = (_metric_window_ends(n_adapt)
                   if config.step_size is None else [])
    pending_windows = list(window_ends)
    moments = _RunningMoments(p)

    leap_count = 0
    if config.step_size is not None:
        eps = float(config.step_size)
    else:
        eps, leap_count = _find_reasonable_epsilon(target, rng, x, lp, grad,
                                                   inv_mass)
    eps0 = eps

    mu = math.log(10.0 * eps)
    log_eps_bar = 0.0
    h_bar = 0.0
    da_t = 0                        # dual-averaging steps since last restart

    states = np.empty((n, p))
    log_post = np.empty(n)
    cum = np.empty(n, dtype=np.int64)
    cum_leapfrogs = np.empty(n, dtype=np.int64)
    states[0], log_post[0] = x, lp
    cum[0] = target.eval_count
    cum_leapfrogs[0] = leap_count

    recent = deque(maxlen=_DIVERGENCE_WINDOW)
    n_divergent = 0
    divergence_steps = []
    n_max_depth = 0
    accept_stats = []

    for m in range(1, n):
        lp, grad = target.value_and_grad(x)

        if pending_windows and m - 1 == pending_windows[0]:
            # window complete: refresh the metric from the samples it
            # collected, then restart the step-size search under it
            pending_windows.pop(0)
            inv_mass = moments.regularized_variance()
            moments = _RunningMoments(p)
            eps, used = _find_reasonable_epsilon(target, rng, x, lp, grad,
                                                 inv_mass)
            leap_count += used
            mu = math.log(10.0 * eps)
            log_eps_bar = 0.0
            h_bar = 0.0
            da_t = 0

        r0 = _draw_momentum(rng, inv_mass)
        joint0 = _joint(lp, r0, inv_mass)
        xm, xp = x.copy(), x.copy()
        rm, rp = r0.copy(), r0.copy()
        gm, gp = grad.copy(), grad.copy()
        xq, lq = x, lp
        lw_traj = 0.0               # the start state carries unit weight
        rho_traj = r0.copy()
        going = True
        depth = 0
        alpha_sum, n_alpha = 0.0, 0
        step_divergent = False
        step_leaps = 0

        while going and depth < config.max_depth:
            v = -1 if rng.uniform() < 0.5 else 1
            if v == -1:
                (xm, rm, gm, _, _, _, xq2, lq2,
                 lw2, rho2, valid2, a2, na2, d2, l2) = _build_tree(
                    target, rng, xm, rm, gm, v, depth, eps, joint0, inv_mass)
            else:
                (_, _, _, xp, rp, gp, xq2, lq2,
                 lw2, rho2, valid2, a2, na2, d2, l2) = _build_tree(
                    target, rng, xp, rp, gp, v, depth, eps, joint0, inv_mass)
            alpha_sum += a2
            n_alpha += na2
            step_divergent = step_divergent or d2
            step_leaps += l2
            if valid2:
                # biased progressive draw: favour the fresh half
                if lw2 >= lw_traj or rng.uniform() < math.exp(lw2 - lw_traj):
                    xq, lq = xq2, lq2
                lw_traj = float(np.logaddexp(lw_traj, lw2))
                rho_traj = rho_traj + rho2
                going = _no_uturn(rho_traj, rm, rp, inv_mass)
            else:
                going = False
            depth += 1
        if going and depth == config.max_depth:
            n_max_depth += 1

        x, lp = np.asarray(xq, dtype=float), lq
        leap_count += step_leaps
        states[m], log_post[m] = x, lp
        cum[m] = target.eval_count
        cum_leapfrogs[m] = leap_count

        recent.append(1 if step_divergent else 0)
        if step_divergent:
            n_divergent += 1
            divergence_steps.append(m)
        if len(recent) == _DIVERGENCE_WINDOW and sum(recent) > _DIVERGENCE_LIMIT:
            raise ConvergenceError(
                f"more than half of the last {_DIVERGENCE_WINDOW} steps diverged "
                f"at step size {eps:.6g}; the posterior geometry likely needs a "
                f"smaller step size or reparameterization")

        accept_stat = alpha_sum / max(n_alpha, 1)
        accept_stats.append(accept_stat)
        if m <= n_adapt and config.step_size is None:
            da_t += 1
            w = 1.0 / (da_t + _DA_T0)
            h_bar = (1.0 - w) * h_bar + w * (delta - accept_stat)
            log_eps = mu - math.sqrt(da_t) / _DA_GAMMA * h_bar
            eta = da_t ** (-_DA_KAPPA)
            log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar
            eps = math.exp(log_eps)
            if m == n_adapt:
                eps = math.exp(log_eps_bar)
            elif m > _METRIC_INIT_BUFFER and pending_windows:
                moments.add(x)

    return Chain(
        params=tuple(target.params),
        states=target.to_original_batch(states),
        log_post=log_post,
        cum_evals=cum,
        sampler="nuts",
        burn_in=n_adapt,
        meta={
            "step_size": eps,
            "initial_step_size": eps0,
            "adapt_steps": n_adapt,
            "target_accept": delta,
            "max_depth": config.max_depth,
            "divergences": n_divergent,
            "divergence_steps": np.asarray(divergence_steps, dtype=np.int64),
            "max_depth_hits": n_max_depth,
            "mean_accept_stat": float(np.mean(accept_stats)) if accept_stats else None,
            "metric_windows": len(window_ends),
            "inv_mass_diag": inv_mass,
            "cum_leapfrogs": cum_leapfrogs,
        },
    )
