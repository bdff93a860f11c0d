"""Transient heat conduction along an insulated specimen column.

The temperature field T(x, t) on (0, L) obeys

    rho*cp * dT/dt - k * d2T/dx2 + (2*h_side/R) * (T - T_inf(t)) = 0

with Robin conditions at both ends: a heat source held at ``T_source``
coupled through ``h_source`` at x = 0, free convection to the ambient
``T_inf(t)`` through ``h_inf`` at x = L, and the lateral-loss term using the
cylinder radius R.  Initial state T(x, 0) = T_inf(0).

Discretization: uniform linear finite elements (consistent mass matrix),
backward-Euler time stepping with a fixed step, linear interpolation in
space (to sensor heights) and in time (to observation instants).  The system
matrix does not depend on time, so its tridiagonal factorization is formed
once per evaluation.

Parameters may be floats or scalar :class:`~bayescal.autodiff.Dual` values;
dual inputs run the same solver in dual arithmetic and yield exact forward
sensitivities of every output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..errors import EvaluationError, ValidationError
from . import _kernels

__all__ = ["ThermalGeometry", "AmbientSeries", "ThermalParams", "thermal_predict",
           "THERMAL_PARAM_NAMES"]

#: canonical parameter order used throughout the package
THERMAL_PARAM_NAMES = ("k", "rho", "cp", "h_source", "h_side", "h_inf", "T_source")


@dataclass(frozen=True)
class ThermalGeometry:
    """Specimen column geometry and sensor layout (SI units)."""

    radius: float
    length: float
    sensor_heights: tuple[float, ...]
    n_elements: int = 25

    def __post_init__(self):
        if not (self.radius > 0.0 and self.length > 0.0):
            raise ValidationError("radius and length must be positive")
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ValidationError(f"n_elements must be an integer >= 2, got {self.n_elements}")
        if len(self.sensor_heights) == 0:
            raise ValidationError("at least one sensor height is required")
        for x in self.sensor_heights:
            if not (0.0 <= x <= self.length):
                raise ValidationError(
                    f"sensor height {x} outside the column [0, {self.length}]")


@dataclass(frozen=True)
class AmbientSeries:
    """Recorded ambient temperature, interpolated piecewise-linearly in time."""

    times: np.ndarray
    temps: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.temps, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValidationError("ambient series needs matching 1-D arrays of length >= 2")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise ValidationError("ambient series must be finite")
        if not np.all(np.diff(t) > 0.0):
            raise ValidationError("ambient times must be strictly ascending")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "temps", v)


@dataclass(frozen=True)
class ThermalParams:
    """Material and exchange coefficients; floats or scalar duals.

    Thermal conductivity ``k`` [W/m/K], density ``rho`` [kg/m^3], specific
    heat ``cp`` [J/kg/K], exchange coefficients [W/m^2/K], source temperature
    [deg C].  ``h_side = 0`` is admitted (laterally insulated column).
    """

    k: object
    rho: object
    cp: object
    h_source: object
    h_side: object
    h_inf: object
    T_source: object

    def __post_init__(self):
        for name in ("k", "rho", "cp", "h_source", "h_inf"):
            if not (ad.value(getattr(self, name)) > 0.0):
                raise ValidationError(f"{name} must be > 0, got {ad.value(getattr(self, name))}")
        if not (ad.value(self.h_side) >= 0.0):
            raise ValidationError(f"h_side must be >= 0, got {ad.value(self.h_side)}")
        if not np.isfinite(ad.value(self.T_source)):
            raise ValidationError("T_source must be finite")

    def fields(self):
        return tuple(getattr(self, name) for name in THERMAL_PARAM_NAMES)


def _pack(values) -> tuple[np.ndarray, np.ndarray]:
    """Split float/Dual scalars into a value vector and tangent matrix."""
    duals = [v for v in values if isinstance(v, ad.Dual)]
    q = 0
    if duals:
        widths = {d.tan.shape[-1] for d in duals}
        if len(widths) != 1:
            raise ValidationError(f"inconsistent tangent widths {sorted(widths)}")
        q = widths.pop()
    pv = np.empty(len(values))
    pt = np.zeros((len(values), q))
    for i, v in enumerate(values):
        if isinstance(v, ad.Dual):
            pv[i] = float(v.val)
            pt[i] = v.tan
        else:
            pv[i] = float(v)
    return pv, pt


def thermal_predict(params: ThermalParams, geometry: ThermalGeometry,
                    ambient: AmbientSeries, obs_times: Sequence[float],
                    dt: float = 20.0):
    """Sensor temperatures at the observation instants.

    Returns a ``(n_sensors, n_obs)`` matrix; a Dual matrix when any parameter
    carries tangents.  Observation times must lie within
    ``[0, max(ambient.times)]``; the integration grid is extended to cover
    the last observation.
    """
    obs = np.asarray(obs_times, dtype=float)
    if obs.ndim != 1 or obs.size == 0:
        raise ValidationError("obs_times must be a non-empty 1-D array")
    if not np.all(np.isfinite(obs)):
        raise ValidationError("obs_times must be finite")
    if np.any(obs < 0.0) or np.any(obs > float(ambient.times[-1])):
        raise ValidationError(
            f"obs_times must lie within [0, {ambient.times[-1]}] covered by the ambient series")
    if not (dt > 0.0):
        raise ValidationError(f"dt must be > 0, got {dt}")

    pv, pt = _pack(params.fields())
    q = pt.shape[1]
    n_el = int(geometry.n_elements)
    t_end = float(obs.max())
    n_steps = int(np.ceil(t_end / dt - 1e-12)) if t_end > 0.0 else 0

    out_v = np.empty((n_steps + 1, n_el + 1))
    out_t = np.empty((n_steps + 1, n_el + 1, q))
    status = _kernels.thermal_profiles(pv, pt, n_el, float(geometry.radius),
                                       float(geometry.length), float(dt), n_steps,
                                       ambient.times, ambient.temps, out_v, out_t)
    if status != 0:
        raise EvaluationError(
            f"thermal solve lost finiteness at t = {status * dt:.6g} s")

    # space: linear interpolation to sensor heights
    hx = geometry.length / n_el
    sx = np.asarray(geometry.sensor_heights, dtype=float)
    el = np.minimum((sx / hx).astype(int), n_el - 1)
    w = sx / hx - el
    sens_v = (1.0 - w) * out_v[:, el] + w * out_v[:, el + 1]        # (S+1, n_sens)
    sens_t = (1.0 - w)[:, None] * out_t[:, el] + w[:, None] * out_t[:, el + 1]

    # time: linear interpolation to observation instants
    if n_steps == 0:
        vals = np.repeat(sens_v[0][:, None], obs.size, axis=1)
        tans = np.repeat(sens_t[0][:, :, None], obs.size, axis=2).transpose(0, 2, 1)
    else:
        pos = obs / dt
        i0 = np.minimum(pos.astype(int), n_steps - 1)
        wt = pos - i0
        vals = ((1.0 - wt) * sens_v[i0].T + wt * sens_v[i0 + 1].T)   # (n_sens, n_obs)
        tans = ((1.0 - wt)[None, :, None] * sens_t[i0].transpose(1, 0, 2)
                + wt[None, :, None] * sens_t[i0 + 1].transpose(1, 0, 2))
    if q == 0:
        return vals
    return ad.Dual(vals, tans)
