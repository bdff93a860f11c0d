"""Built-in benchmark systems: priors, geometries, and target factories.

Three systems are wired into the harness:

* ``thermal`` -- seven-parameter heat-conduction calibration against four
  column sensors;
* ``viscous`` -- six-parameter squeeze-flow calibration against contact
  radii extracted at exponentially spaced instants;
* ``gaussian-test`` -- a linear-Gaussian system (identity forward model,
  correlated noise) whose posterior is available in closed form, used to
  check samplers and divergence estimates against exact answers.

Truncated normal priors use bounds at 0.1x and 10x the parent mean; the
source temperature is an untruncated normal whose std converts a +-0.49 deg C
bound at 99% coverage.  Log-normal rows are declared by linear-space moments.
"""
from __future__ import annotations

import numpy as np

from .errors import EvaluationError, ValidationError
from .inference import (Identity, Log, ObservationSet, PosteriorTarget,
                        PriorParameter, PriorSpec, UnconstrainedTarget)
from .models.squeeze import SqueezeParams, squeeze_predict
from .models.thermal import AmbientSeries, ThermalGeometry, ThermalParams, thermal_predict
from .probability import Beta, LogNormal, Normal, TruncatedNormal

__all__ = [
    "THERMAL_GEOMETRY", "thermal_prior", "viscous_prior", "gaussian_test_prior",
    "make_thermal_target", "make_squeeze_target", "make_gaussian_target",
    "gaussian_posterior_moments", "DEFAULT_GAUSSIAN_COV",
]

#: measured specimen column: radius and height in meters, sensor heights
#: above the heat source, 25 uniform linear elements
THERMAL_GEOMETRY = ThermalGeometry(
    radius=0.0286,
    length=0.0930,
    sensor_heights=(0.0050, 0.0258, 0.0450, 0.0665),
    n_elements=25,
)

#: default thermal backward-Euler step [s]
THERMAL_DT = 20.0


def _tn(mean: float, std: float) -> TruncatedNormal:
    return TruncatedNormal(mean, std, 0.1 * mean, 10.0 * mean)


def thermal_prior() -> PriorSpec:
    """Marginal priors of the heat-conduction parameters (SI units)."""
    return PriorSpec([
        PriorParameter("k", _tn(0.300, 0.030), unit="W/m/K"),
        PriorParameter("rho", _tn(900.0, 90.0), unit="kg/m^3"),
        PriorParameter("cp", _tn(2500.0, 250.0), unit="J/kg/K"),
        PriorParameter("h_source", _tn(100.0, 50.0), unit="W/m^2/K"),
        PriorParameter("h_side", _tn(1.0, 0.5), unit="W/m^2/K"),
        PriorParameter("h_inf", _tn(10.0, 5.0), unit="W/m^2/K"),
        PriorParameter("T_source", Normal(40.0, 0.190), unit="degC"),
    ])


def viscous_prior() -> PriorSpec:
    """Marginal priors of the squeeze-flow parameters (SI units)."""
    return PriorSpec([
        PriorParameter("F", TruncatedNormal(2.8, 0.10, 0.0, np.inf),
                       transform=Log(0.0), unit="N"),
        PriorParameter("V", LogNormal.from_moments(0.20e-6, 2.2e-8), unit="m^3"),
        PriorParameter("R0", LogNormal.from_moments(7.6e-3, 1.5e-4), unit="m"),
        PriorParameter("eta", LogNormal.from_moments(0.87, 0.012), unit="Pa s"),
        PriorParameter("gamma", LogNormal.from_moments(4.54e-2, 2.53e-3), unit="N/m"),
        PriorParameter("alpha", Beta(3.0, 8.0), unit="-"),
    ])


def gaussian_test_prior(dim: int = 2, prior_std: float = 5.0) -> PriorSpec:
    """Independent zero-mean normal priors with identity transforms."""
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    return PriorSpec([
        PriorParameter(f"x{i + 1}", Normal(0.0, prior_std), transform=Identity())
        for i in range(dim)
    ])


# ---------------------------------------------------------------------------
# target factories
# ---------------------------------------------------------------------------

def make_thermal_target(ambient: AmbientSeries, obs_times, obs: ObservationSet,
                        geometry: ThermalGeometry = THERMAL_GEOMETRY,
                        prior: PriorSpec | None = None,
                        dt: float = THERMAL_DT) -> UnconstrainedTarget:
    """Posterior target for the thermal system.

    Predictions are flattened sensor-major: all instants of sensor 1, then
    sensor 2, ...; ``obs.y`` must follow the same layout
    (``n_sensors * n_obs_times`` entries).
    """
    prior = prior or thermal_prior()
    obs_times = np.asarray(obs_times, dtype=float)
    n_expected = len(geometry.sensor_heights) * obs_times.size
    if obs.n != n_expected:
        raise ValidationError(
            f"observation vector has {obs.n} entries, expected "
            f"{n_expected} (sensors x instants, sensor-major)")

    def model(theta):
        try:
            params = ThermalParams(theta[0], theta[1], theta[2], theta[3],
                                   theta[4], theta[5], theta[6])
        except ValidationError as exc:
            raise EvaluationError(
                f"parameter draw outside the model domain: {exc}") from exc
        return thermal_predict(params, geometry, ambient, obs_times, dt=dt).ravel()

    return UnconstrainedTarget(PosteriorTarget(prior, model, obs, name="thermal"))


def make_squeeze_target(obs_times, obs: ObservationSet,
                        prior: PriorSpec | None = None,
                        dt: float | None = None) -> UnconstrainedTarget:
    """Posterior target for the squeeze-flow (viscous) system."""
    prior = prior or viscous_prior()
    obs_times = np.asarray(obs_times, dtype=float)
    if obs.n != obs_times.size:
        raise ValidationError(
            f"observation vector has {obs.n} entries, expected {obs_times.size}")

    def model(theta):
        # a sampler proposal mapped through exp can overflow past the
        # parameter domain; that is a failed evaluation, not a usage error
        try:
            params = SqueezeParams(theta[0], theta[1], theta[2], theta[3],
                                   theta[4], theta[5])
        except ValidationError as exc:
            raise EvaluationError(
                f"parameter draw outside the model domain: {exc}") from exc
        return squeeze_predict(params, obs_times, dt=dt)

    return UnconstrainedTarget(PosteriorTarget(prior, model, obs, name="viscous"))


#: data covariance of the 2-D correlated gaussian-test system
DEFAULT_GAUSSIAN_COV = np.array([[1.0, 0.9], [0.9, 1.0]])


def make_gaussian_target(dim: int = 2, prior_std: float = 5.0,
                         data_cov: np.ndarray | None = None,
                         y: np.ndarray | None = None) -> UnconstrainedTarget:
    """Linear-Gaussian system with identity forward model.

    The posterior is the conjugate normal returned by
    :func:`gaussian_posterior_moments`; with the defaults it is a strongly
    correlated 2-D Gaussian centered at the origin.
    """
    if data_cov is None:
        data_cov = DEFAULT_GAUSSIAN_COV if dim == 2 else np.eye(dim)
    data_cov = np.asarray(data_cov, dtype=float)
    y = np.zeros(dim) if y is None else np.asarray(y, dtype=float)
    obs = ObservationSet(y, data_cov, labels=tuple(f"y{i + 1}" for i in range(dim)))
    prior = gaussian_test_prior(dim, prior_std)

    def model(theta):
        return theta

    return UnconstrainedTarget(PosteriorTarget(prior, model, obs, name="gaussian-test"))


def gaussian_posterior_moments(dim: int = 2, prior_std: float = 5.0,
                               data_cov: np.ndarray | None = None,
                               y: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact posterior mean and covariance of the gaussian-test system."""
    if data_cov is None:
        data_cov = DEFAULT_GAUSSIAN_COV if dim == 2 else np.eye(dim)
    data_cov = np.asarray(data_cov, dtype=float)
    y = np.zeros(dim) if y is None else np.asarray(y, dtype=float)
    prec = np.linalg.inv(data_cov) + np.eye(dim) / prior_std ** 2
    cov = np.linalg.inv(prec)
    mean = cov @ np.linalg.inv(data_cov) @ y
    return mean, cov
