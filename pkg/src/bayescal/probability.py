"""Prior distribution primitives.

Five distribution families cover the calibration studies: normal, truncated
normal, log-normal, beta, and uniform.  Each exposes

* ``log_density(x)`` -- accepts floats, arrays, or scalar :class:`~bayescal.autodiff.Dual`
  inputs (densities participate in gradient evaluations), returning ``-inf``
  outside the support rather than raising;
* ``draw(rng, size=None)`` -- sampling via a :class:`numpy.random.Generator`;
* ``support`` -- the interval on which the density is positive;
* ``nominal()`` -- a representative location (used for synthetic truths).

Log-normals are parameterized by the log-space pair ``(mu_hat, sigma_hat)``;
:func:`lognormal_from_moments` maps a linear-space mean/std pair onto it.
Truncated normals renormalize the parent normal over ``[lower, upper]`` with
the normal CDF; their ``mean``/``std`` are the *parent* moments, not the
truncated ones.

Support endpoints follow the natural convention per family: truncated-normal
and uniform densities are positive on the closed interval, while beta and
log-normal use open endpoints (their raw formulas are singular there).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special as _sp

from . import autodiff as ad
from .errors import ValidationError

__all__ = [
    "MomentPair", "lognormal_from_moments", "Distribution",
    "Normal", "TruncatedNormal", "LogNormal", "Beta", "Uniform",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class MomentPair(NamedTuple):
    """Linear-space mean and standard deviation."""

    mean: float
    std: float


def lognormal_from_moments(m: MomentPair) -> tuple[float, float]:
    """Map a (mean, std) pair to log-normal parameters ``(mu_hat, sigma_hat)``.

    Uses ``sigma_hat^2 = log(1 + (std/mean)^2)`` and
    ``mu_hat = log(mean) - sigma_hat^2 / 2``; exact in the degenerate
    ``std -> 0`` limit.  Requires ``mean > 0`` and ``std >= 0``.
    """
    mean, std = float(m[0]), float(m[1])
    if not (mean > 0.0) or not (std >= 0.0):
        raise ValidationError(f"lognormal moments need mean > 0, std >= 0; got {m}")
    s2 = math.log1p((std / mean) ** 2)
    return math.log(mean) - 0.5 * s2, math.sqrt(s2)


def _norm_cdf(z: float) -> float:
    return float(_sp.ndtr(z))


class Distribution(ABC):
    """Common interface of the prior families."""

    #: whether the left/right support endpoints are excluded
    _open_ends: tuple[bool, bool] = (False, False)

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]:
        """Interval (lo, hi) of positive density."""

    @abstractmethod
    def _raw_log_density(self, x):
        """Log density assuming ``x`` lies strictly inside the support."""

    @abstractmethod
    def draw(self, rng: np.random.Generator, size=None):
        """Sample via inverse CDF or a native generator method."""

    @abstractmethod
    def nominal(self) -> float:
        """Representative location (distribution mean where closed-form)."""

    def _inside(self, arr):
        lo, hi = self.support
        left = arr > lo if self._open_ends[0] else arr >= lo
        right = arr < hi if self._open_ends[1] else arr <= hi
        return left & right & np.isfinite(arr)

    def log_density(self, x):
        """Log density at ``x``; ``-inf`` outside the support (never raises).

        ``x`` may be a float, an ndarray, or a scalar Dual.
        """
        if isinstance(x, ad.Dual):
            if np.ndim(x.val) != 0:
                raise ValidationError("dual log_density inputs must be scalar")
            if not bool(self._inside(np.float64(x.val))):
                return -np.inf
            return self._raw_log_density(x)
        arr = np.asarray(x, dtype=float)
        inside = self._inside(arr)
        safe = np.where(inside, arr, self.nominal())
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self._raw_log_density(safe), dtype=float)
        out = np.where(inside, out, -np.inf)
        if np.ndim(x) == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class Normal(Distribution):
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0.0):
            raise ValidationError(f"normal std must be > 0, got {self.std}")

    @property
    def support(self):
        return (-np.inf, np.inf)

    def _raw_log_density(self, x):
        z = (x - self.mean) / self.std
        return -0.5 * z * z - math.log(self.std) - _HALF_LOG_2PI

    def draw(self, rng, size=None):
        return self.mean + self.std * rng.standard_normal(size)

    def nominal(self):
        return self.mean


@dataclass(frozen=True)
class TruncatedNormal(Distribution):
    """Normal(mean, std) restricted to [lower, upper] and renormalized.

    ``mean`` and ``std`` parameterize the untruncated parent.  Either bound
    may be infinite (one-sided truncation).
    """

    mean: float
    std: float
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.std > 0.0):
            raise ValidationError(f"truncated normal std must be > 0, got {self.std}")
        if not (self.lower < self.upper):
            raise ValidationError(
                f"truncated normal needs lower < upper, got [{self.lower}, {self.upper}]")
        if not (self._mass() > 0.0):
            raise ValidationError(
                f"truncation [{self.lower}, {self.upper}] leaves no probability mass")

    def _mass(self) -> float:
        lo = (self.lower - self.mean) / self.std
        hi = (self.upper - self.mean) / self.std
        return _norm_cdf(hi) - _norm_cdf(lo)

    @property
    def support(self):
        return (self.lower, self.upper)

    def _raw_log_density(self, x):
        z = (x - self.mean) / self.std
        return (-0.5 * z * z - math.log(self.std) - _HALF_LOG_2PI
                - math.log(self._mass()))

    def draw(self, rng, size=None):
        lo = _norm_cdf((self.lower - self.mean) / self.std)
        hi = _norm_cdf((self.upper - self.mean) / self.std)
        u = rng.uniform(size=size)
        return self.mean + self.std * _sp.ndtri(lo + u * (hi - lo))

    def nominal(self):
        return self.mean


@dataclass(frozen=True)
class LogNormal(Distribution):
    """exp(Normal(mu_hat, sigma_hat)); see :func:`lognormal_from_moments`."""

    mu_hat: float
    sigma_hat: float

    _open_ends = (True, False)

    def __post_init__(self):
        if not (self.sigma_hat > 0.0):
            raise ValidationError(f"lognormal sigma_hat must be > 0, got {self.sigma_hat}")

    @classmethod
    def from_moments(cls, mean: float, std: float) -> "LogNormal":
        mu, sg = lognormal_from_moments(MomentPair(mean, std))
        return cls(mu, sg)

    @property
    def support(self):
        return (0.0, np.inf)

    def _raw_log_density(self, x):
        lx = ad.log(x)
        z = (lx - self.mu_hat) / self.sigma_hat
        return -lx - 0.5 * z * z - math.log(self.sigma_hat) - _HALF_LOG_2PI

    def draw(self, rng, size=None):
        return np.exp(self.mu_hat + self.sigma_hat * rng.standard_normal(size))

    def nominal(self):
        return math.exp(self.mu_hat + 0.5 * self.sigma_hat ** 2)


@dataclass(frozen=True)
class Beta(Distribution):
    a: float
    b: float

    _open_ends = (True, True)

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValidationError(f"beta shapes must be > 0, got ({self.a}, {self.b})")

    @property
    def support(self):
        return (0.0, 1.0)

    def _raw_log_density(self, x):
        log_norm = _sp.betaln(self.a, self.b)
        return (self.a - 1.0) * ad.log(x) + (self.b - 1.0) * ad.log1p(-x) - log_norm

    def draw(self, rng, size=None):
        return rng.beta(self.a, self.b, size=size)

    def nominal(self):
        return self.a / (self.a + self.b)


@dataclass(frozen=True)
class Uniform(Distribution):
    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)
                and self.lower < self.upper):
            raise ValidationError(
                f"uniform needs finite lower < upper, got [{self.lower}, {self.upper}]")

    @property
    def support(self):
        return (self.lower, self.upper)

    def _raw_log_density(self, x):
        c = -math.log(self.upper - self.lower)
        if isinstance(x, ad.Dual):
            return ad.Dual(c, np.zeros_like(x.tan))
        return np.full_like(np.asarray(x, dtype=float), c)

    def draw(self, rng, size=None):
        return rng.uniform(self.lower, self.upper, size=size)

    def nominal(self):
        return 0.5 * (self.lower + self.upper)
