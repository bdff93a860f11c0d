"""Squeeze flow of a viscous adhesive film between circular plates.

State is the film height H(t); the contact radius follows from volume
conservation, R = sqrt(V / (pi * H)).  The height obeys

    dH/dt = (8/3) * ( -F*H^3 / (4*pi*eta*R^4) + kappa*gamma*H^3 / (2*eta*R^2) )

with the meniscus curvature kappa = 2*alpha/H: a constant squeezing force F
drives the film down while capillarity (surface tension gamma, wetting
coefficient alpha) resists, so the height relaxes toward the equilibrium
where both terms balance.

Integration: forward Euler with a uniform step from H(0) = V/(pi*R0^2);
heights are interpolated linearly to the observation instants and mapped to
radii through volume conservation (exact by construction).  Parameters may
be floats or scalar duals; dual inputs yield exact forward sensitivities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..errors import EvaluationError, ValidationError
from . import _kernels
from .thermal import _pack

__all__ = ["SqueezeParams", "height_rate", "squeeze_predict", "SQUEEZE_PARAM_NAMES",
           "DEFAULT_STEP_FRACTION"]

#: canonical parameter order used throughout the package
SQUEEZE_PARAM_NAMES = ("F", "V", "R0", "eta", "gamma", "alpha")

#: default uniform step = t_end * DEFAULT_STEP_FRACTION
DEFAULT_STEP_FRACTION = 1e-5


@dataclass(frozen=True)
class SqueezeParams:
    """Squeeze-flow parameters; floats or scalar duals (SI units).

    Force ``F`` [N], adhesive volume ``V`` [m^3], initial contact radius
    ``R0`` [m], viscosity ``eta`` [Pa s], surface tension ``gamma`` [N/m],
    wetting coefficient ``alpha`` in [0, 1].
    """

    F: object
    V: object
    R0: object
    eta: object
    gamma: object
    alpha: object

    def __post_init__(self):
        for name in ("F", "V", "R0", "eta", "gamma"):
            if not (ad.value(getattr(self, name)) > 0.0):
                raise ValidationError(f"{name} must be > 0, got {ad.value(getattr(self, name))}")
        if not (0.0 <= ad.value(self.alpha) <= 1.0):
            raise ValidationError(f"alpha must lie in [0, 1], got {ad.value(self.alpha)}")

    def fields(self):
        return tuple(getattr(self, name) for name in SQUEEZE_PARAM_NAMES)


def height_rate(params: SqueezeParams, height):
    """Right-hand side dH/dt at a given film height (floats or duals).

    Written as the literal constitutive expression; the jitted integrator
    must agree with it exactly (enforced by tests).
    """
    if not (ad.value(height) > 0.0):
        raise ValidationError(f"height must be > 0, got {ad.value(height)}")
    F, V, _, eta, gamma, alpha = params.fields()
    r_sq = V / (np.pi * height)
    kappa = 2.0 * alpha / height
    return (8.0 / 3.0) * (-F * height ** 3 / (4.0 * np.pi * eta * r_sq ** 2)
                          + kappa * gamma * height ** 3 / (2.0 * eta * r_sq))


def squeeze_predict(params: SqueezeParams, obs_times: Sequence[float],
                    dt: float | None = None):
    """Contact radii at the observation instants.

    Returns a ``(n_obs,)`` vector; a Dual vector when any parameter carries
    tangents.  ``dt`` defaults to ``max(obs_times) * 1e-5``.  Raises
    :class:`EvaluationError` if the explicit step drives the height
    non-positive (step too coarse for the parameter draw).
    """
    obs = np.asarray(obs_times, dtype=float)
    if obs.ndim != 1 or obs.size == 0:
        raise ValidationError("obs_times must be a non-empty 1-D array")
    if not np.all(np.isfinite(obs)) or np.any(obs < 0.0):
        raise ValidationError("obs_times must be finite and >= 0")

    pv, pt = _pack(params.fields())
    q = pt.shape[1]
    if not np.all(np.isfinite(pv)):
        raise EvaluationError(
            f"parameter values must be finite to integrate, got {pv}")
    h0 = pv[1] / (np.pi * pv[2] ** 2)
    if not (np.isfinite(h0) and h0 > 0.0):
        raise EvaluationError(
            f"initial film height V/(pi R0^2) = {h0!r} is not integrable "
            f"(V = {pv[1]!r}, R0 = {pv[2]!r})")
    t_end = float(obs.max())

    if t_end == 0.0:
        heights = _dual_or_plain(np.full(obs.size, h0),
                                 np.tile(_h0_tangent(pv, pt), (obs.size, 1)), q)
        return _radius_from_height(params, heights)

    if dt is None:
        dt = t_end * DEFAULT_STEP_FRACTION
    if not (dt > 0.0):
        raise ValidationError(f"dt must be > 0, got {dt}")
    n_steps = int(np.ceil(t_end / dt - 1e-12))

    out_v = np.empty(n_steps + 1)
    out_t = np.empty((n_steps + 1, q))
    try:
        status = _kernels.squeeze_heights(pv, pt, float(dt), n_steps, out_v, out_t)
    except ZeroDivisionError as exc:
        # a subnormal film height can underflow to zero mid-integration
        raise EvaluationError(
            "film height underflowed to zero during integration") from exc
    if status != 0:
        raise EvaluationError(
            f"film height became non-positive at t = {status * dt:.6g} s "
            f"(explicit step {dt:.3g} s too coarse for this parameter draw)")

    pos = obs / dt
    i0 = np.minimum(pos.astype(int), n_steps - 1)
    wt = pos - i0
    h_v = (1.0 - wt) * out_v[i0] + wt * out_v[i0 + 1]
    h_t = (1.0 - wt)[:, None] * out_t[i0] + wt[:, None] * out_t[i0 + 1]
    return _radius_from_height(params, _dual_or_plain(h_v, h_t, q))


def _h0_tangent(pv, pt):
    c = np.pi * pv[2] ** 2
    return pt[1] / c - 2.0 * pv[1] * pt[2] / (c * pv[2])


def _dual_or_plain(v, t, q):
    return ad.Dual(v, t) if q else v


def _radius_from_height(params: SqueezeParams, heights):
    return ad.sqrt(params.V / (np.pi * heights))
