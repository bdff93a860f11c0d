"""Posterior assembly: priors, transforms, observations, and targets.

A :class:`PriorSpec` orders named parameters, each with a marginal prior and
a bijection onto the real line.  Samplers operate on the transformed
(unconstrained) coordinates; the Jacobian term keeps the density consistent,
and chains are reported back in original coordinates.

A :class:`PosteriorTarget` binds a prior, a forward model, and an
:class:`ObservationSet`; its log-likelihood is the Gaussian misfit

    -(1/2) * (d(theta) - y)^T Sigma^{-1} (d(theta) - y)

with additive constants dropped (they cancel in every ratio, reference
density, and divergence computed here).  Every forward-model invocation,
plain or dual, bumps the target's evaluation counter by exactly one; prior
support short-circuits skip the model and are tallied separately.

:class:`UnconstrainedTarget` is the sampler-facing view: ``log_prob`` /
``value_and_grad`` over unconstrained coordinates, initial draws from the
prior, and vectorized back-transformation for whole chains.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg as _la
from scipy import special as _sp

from . import autodiff as ad
from .errors import EvaluationError, ValidationError
from .probability import Beta, Distribution, LogNormal, Normal, TruncatedNormal, Uniform

__all__ = [
    "Transform", "Identity", "Log", "Logit", "default_transform",
    "PriorParameter", "PriorSpec", "ObservationSet",
    "EvalCounter", "PosteriorTarget", "UnconstrainedTarget",
]


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def _softplus(x):
    """log(1 + exp(x)) for scalar floats or duals, overflow-safe."""
    if ad.value(x) > 0.0:
        return x + ad.log1p(ad.exp(-x))
    return ad.log1p(ad.exp(x))


class Transform(ABC):
    """Bijection from the real line onto a parameter's original domain."""

    @abstractmethod
    def forward(self, phi):
        """Original-space value at unconstrained ``phi`` (float or dual)."""

    @abstractmethod
    def inverse(self, theta: float) -> float:
        """Unconstrained coordinate of an in-domain original value."""

    @abstractmethod
    def log_jacobian(self, phi):
        """log |d theta / d phi| at ``phi`` (float or dual)."""

    @abstractmethod
    def forward_np(self, arr: np.ndarray) -> np.ndarray:
        """Vectorized plain-array version of :meth:`forward`."""


@dataclass(frozen=True)
class Identity(Transform):
    def forward(self, phi):
        return phi

    def inverse(self, theta):
        return float(theta)

    def log_jacobian(self, phi):
        return 0.0

    def forward_np(self, arr):
        return np.asarray(arr, dtype=float)


@dataclass(frozen=True)
class Log(Transform):
    """theta = lower + exp(phi); maps onto (lower, inf)."""

    lower: float = 0.0

    def forward(self, phi):
        return self.lower + ad.exp(phi)

    def inverse(self, theta):
        if not (theta > self.lower):
            raise ValidationError(f"value {theta} not above lower bound {self.lower}")
        return float(np.log(theta - self.lower))

    def log_jacobian(self, phi):
        return phi

    def forward_np(self, arr):
        return self.lower + np.exp(np.asarray(arr, dtype=float))


@dataclass(frozen=True)
class Logit(Transform):
    """theta = lower + (upper - lower) * sigmoid(phi); maps onto (lower, upper)."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)
                and self.lower < self.upper):
            raise ValidationError(
                f"logit transform needs finite lower < upper, got [{self.lower}, {self.upper}]")

    def forward(self, phi):
        if ad.value(phi) >= 0.0:
            s = 1.0 / (1.0 + ad.exp(-phi))
        else:
            e = ad.exp(phi)
            s = e / (1.0 + e)
        return self.lower + (self.upper - self.lower) * s

    def inverse(self, theta):
        if not (self.lower < theta < self.upper):
            raise ValidationError(
                f"value {theta} outside open interval ({self.lower}, {self.upper})")
        z = (theta - self.lower) / (self.upper - self.lower)
        return float(np.log(z) - np.log1p(-z))

    def log_jacobian(self, phi):
        return np.log(self.upper - self.lower) - _softplus(phi) - _softplus(-phi)

    def forward_np(self, arr):
        return self.lower + (self.upper - self.lower) * _sp.expit(np.asarray(arr, dtype=float))


def default_transform(dist: Distribution) -> Transform:
    """Transform implied by a prior's support.

    Unbounded supports map through the identity, one-sided supports through
    the shifted log, and bounded intervals through the scaled logit.
    """
    lo, hi = dist.support
    if np.isinf(lo) and np.isinf(hi):
        return Identity()
    if np.isfinite(lo) and np.isinf(hi):
        return Log(lo)
    if np.isfinite(lo) and np.isfinite(hi):
        return Logit(lo, hi)
    raise ValidationError(f"no default transform for support ({lo}, {hi})")


# ---------------------------------------------------------------------------
# prior specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PriorParameter:
    """One named calibration parameter: marginal prior plus transform."""

    name: str
    dist: Distribution
    transform: Transform | None = None
    unit: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValidationError("parameter name must be non-empty")
        if self.transform is None:
            object.__setattr__(self, "transform", default_transform(self.dist))


class PriorSpec:
    """Ordered collection of independent parameter priors."""

    def __init__(self, parameters: Sequence[PriorParameter]):
        params = tuple(parameters)
        if not params:
            raise ValidationError("prior spec needs at least one parameter")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate parameter names in {names}")
        self.parameters = params

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def dim(self) -> int:
        return len(self.parameters)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One joint draw in original coordinates."""
        return np.array([p.dist.draw(rng) for p in self.parameters])

    def log_density(self, theta):
        """Sum of marginal log densities; theta indexable (array or Dual)."""
        total = 0.0
        for i, p in enumerate(self.parameters):
            li = p.dist.log_density(theta[i])
            if not np.isfinite(ad.value(li)):
                return -np.inf
            total = total + li
        return total

    def to_unconstrained(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValidationError(f"expected shape ({self.dim},), got {theta.shape}")
        return np.array([p.transform.inverse(theta[i])
                         for i, p in enumerate(self.parameters)])

    def from_unconstrained(self, phi):
        """Original coordinates; returns a Dual vector for Dual input."""
        return ad.stack([p.transform.forward(phi[i])
                         for i, p in enumerate(self.parameters)])

    def log_jacobian(self, phi):
        total = 0.0
        for i, p in enumerate(self.parameters):
            total = total + p.transform.log_jacobian(phi[i])
        return total

    def back_transform_array(self, phi_mat: np.ndarray) -> np.ndarray:
        """Vectorized from_unconstrained over rows of an (N, p) array."""
        phi_mat = np.asarray(phi_mat, dtype=float)
        out = np.empty_like(phi_mat)
        for i, p in enumerate(self.parameters):
            out[:, i] = p.transform.forward_np(phi_mat[:, i])
        return out


# ---------------------------------------------------------------------------
# observations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservationSet:
    """Measured data vector with Gaussian noise covariance.

    ``cov`` is either a 1-D array of per-point variances (diagonal noise) or
    a full SPD matrix.  Labels are carried through to reports.
    """

    y: np.ndarray
    cov: np.ndarray
    labels: tuple[str, ...] = ()
    _inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if y.ndim != 1 or y.size == 0 or not np.all(np.isfinite(y)):
            raise ValidationError("y must be a finite non-empty 1-D array")
        if cov.ndim == 1:
            if cov.shape != y.shape:
                raise ValidationError(f"variance vector shape {cov.shape} != y shape {y.shape}")
            if not np.all(cov > 0.0):
                raise ValidationError("variances must be positive")
            inv = 1.0 / cov
        elif cov.ndim == 2:
            if cov.shape != (y.size, y.size):
                raise ValidationError(f"covariance shape {cov.shape} incompatible with y")
            if not np.allclose(cov, cov.T, rtol=1e-10, atol=0.0):
                raise ValidationError("covariance must be symmetric")
            try:
                c, low = _la.cho_factor(cov)
            except _la.LinAlgError as exc:
                raise ValidationError(f"covariance not positive definite: {exc}") from exc
            inv = _la.cho_solve((c, low), np.eye(y.size))
        else:
            raise ValidationError("cov must be 1-D (variances) or 2-D (matrix)")
        if self.labels and len(self.labels) != y.size:
            raise ValidationError("labels length must match y")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "_inv", inv)

    @property
    def n(self) -> int:
        return self.y.size

    def quad_form(self, residual):
        """r^T Sigma^{-1} r for a plain or Dual residual vector."""
        if self.cov.ndim == 1:
            return (residual * residual * self._inv).sum()
        return (residual * ad.matvec(self._inv, residual)).sum()


# ---------------------------------------------------------------------------
# posterior target
# ---------------------------------------------------------------------------

class EvalCounter:
    """Monotone tally of forward-model evaluations."""

    __slots__ = ("count", "short_circuits", "failures")

    def __init__(self):
        self.count = 0
        self.short_circuits = 0
        self.failures = 0

    def add(self, n: int = 1):
        self.count += n


class PosteriorTarget:
    """Prior x likelihood posterior over original coordinates.

    ``model`` maps an indexable parameter vector (ndarray or Dual) to a
    prediction vector aligned with ``obs.y``.  One call = one evaluation,
    counted whether or not it succeeds.
    """

    def __init__(self, prior: PriorSpec, model: Callable, obs: ObservationSet,
                 name: str = ""):
        self.prior = prior
        self.model = model
        self.obs = obs
        self.name = name
        self.counter = EvalCounter()

    @property
    def dim(self) -> int:
        return self.prior.dim

    @property
    def eval_count(self) -> int:
        return self.counter.count

    def log_prior(self, theta):
        return self.prior.log_density(theta)

    def log_likelihood(self, theta):
        """Gaussian misfit; increments the evaluation counter by one."""
        self.counter.add(1)
        try:
            pred = self.model(theta)
        except EvaluationError:
            self.counter.failures += 1
            raise
        residual = pred - self.obs.y
        return -0.5 * self.obs.quad_form(residual)

    def log_posterior(self, theta):
        """Prior + likelihood; skips the model outside prior support."""
        lp = self.log_prior(theta)
        if not np.isfinite(ad.value(lp)):
            self.counter.short_circuits += 1
            return -np.inf
        try:
            ll = self.log_likelihood(theta)
        except EvaluationError:
            return -np.inf
        return lp + ll


class UnconstrainedTarget:
    """Sampler-facing view of a posterior over unconstrained coordinates."""

    def __init__(self, target: PosteriorTarget):
        self.target = target
        self.prior = target.prior

    @property
    def dim(self) -> int:
        return self.target.dim

    @property
    def name(self) -> str:
        return self.target.name

    @property
    def params(self) -> tuple[str, ...]:
        return self.prior.names

    @property
    def eval_count(self) -> int:
        return self.target.counter.count

    @property
    def counter(self) -> EvalCounter:
        return self.target.counter

    def draw_init(self, rng: np.random.Generator) -> np.ndarray:
        """Prior draw mapped to unconstrained coordinates."""
        return self.prior.to_unconstrained(self.prior.sample(rng))

    def log_prob(self, phi: np.ndarray) -> float:
        """Posterior log density in phi (includes the Jacobian term)."""
        theta = self.prior.from_unconstrained(np.asarray(phi, dtype=float))
        lp = self.target.log_prior(theta)
        if not np.isfinite(ad.value(lp)):
            self.target.counter.short_circuits += 1
            return -np.inf
        try:
            ll = self.target.log_likelihood(theta)
        except EvaluationError:
            return -np.inf
        return float(lp + ll + self.prior.log_jacobian(phi))

    def value_and_grad(self, phi: np.ndarray) -> tuple[float, np.ndarray]:
        """Log density and its gradient from one dual model evaluation."""
        phi = np.asarray(phi, dtype=float)
        phid = ad.seed(phi)
        theta = self.prior.from_unconstrained(phid)
        lp = self.target.log_prior(theta)
        if not np.isfinite(ad.value(lp)):
            self.target.counter.short_circuits += 1
            return -np.inf, np.zeros(phi.size)
        try:
            ll = self.target.log_likelihood(theta)
        except EvaluationError:
            return -np.inf, np.zeros(phi.size)
        total = lp + ll + self.prior.log_jacobian(phid)
        if not isinstance(total, ad.Dual):
            return float(total), np.zeros(phi.size)
        val = float(total.val)
        if not np.isfinite(val):
            return val, np.zeros(phi.size)
        return val, np.array(total.tan, dtype=float)

    def log_posterior_gradient(self, phi: np.ndarray) -> np.ndarray:
        """Gradient alone; see :meth:`value_and_grad`."""
        return self.value_and_grad(phi)[1]

    def to_original(self, phi: np.ndarray) -> np.ndarray:
        return np.asarray(self.prior.from_unconstrained(np.asarray(phi, dtype=float)))

    def to_original_batch(self, phi_mat: np.ndarray) -> np.ndarray:
        return self.prior.back_transform_array(phi_mat)
