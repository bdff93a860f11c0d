"""Transient heat-conduction solver: physics oracles and discretization laws."""
import numpy as np
import pytest

from bayescal import autodiff as ad
from bayescal.errors import ValidationError
from bayescal.models.thermal import (AmbientSeries, ThermalGeometry,
                                     ThermalParams, thermal_predict)
from bayescal.systems import THERMAL_GEOMETRY

T_AMB = 21.0


def constant_ambient(t_end=200_000.0, temp=T_AMB):
    return AmbientSeries(np.array([0.0, t_end]), np.array([temp, temp]))


def nominal_params(**overrides):
    base = dict(k=0.300, rho=900.0, cp=2500.0, h_source=100.0,
                h_side=1.0, h_inf=10.0, T_source=40.0)
    base.update(overrides)
    return ThermalParams(**base)


class TestSteadyState:
    def test_insulated_column_reaches_series_resistance_flux(self):
        """With no lateral loss the long-time profile is the 1-D series
        circuit: q = (T_source - T_inf) / (1/h_source + L/k + 1/h_inf) and
        T(x) = T_source - q/h_source - q*x/k."""
        geom = ThermalGeometry(radius=0.0286, length=0.0930,
                               sensor_heights=(0.005, 0.0258, 0.045, 0.0665),
                               n_elements=100)
        params = nominal_params(h_side=1e-12)
        amb = constant_ambient()
        t_obs = np.array([200_000.0])
        temps = thermal_predict(params, geom, amb, t_obs)[:, 0]

        q = (40.0 - T_AMB) / (1.0 / 100.0 + 0.0930 / 0.300 + 1.0 / 10.0)
        x = np.asarray(geom.sensor_heights)
        expected = 40.0 - q / 100.0 - q * x / 0.300
        assert np.allclose(temps, expected, rtol=5e-3)

    def test_lateral_loss_cools_the_column(self):
        geom = THERMAL_GEOMETRY
        amb = constant_ambient()
        t_obs = np.array([200_000.0])
        warm = thermal_predict(nominal_params(h_side=1e-12), geom, amb, t_obs)
        cooled = thermal_predict(nominal_params(h_side=2.0), geom, amb, t_obs)
        assert np.all(cooled < warm)


class TestMaxPrinciple:
    def test_temperatures_bounded_by_source_and_ambient(self, rng):
        geom = THERMAL_GEOMETRY
        amb = constant_ambient(t_end=60_000.0)
        t_obs = np.linspace(500.0, 60_000.0, 24)
        for _ in range(5):
            params = nominal_params(
                k=rng.uniform(0.05, 2.0), rho=rng.uniform(500, 2000),
                cp=rng.uniform(1000, 4000), h_source=rng.uniform(10, 500),
                h_side=rng.uniform(0.0, 5.0), h_inf=rng.uniform(1, 50),
                T_source=rng.uniform(30, 80))
            temps = thermal_predict(params, geom, amb, t_obs)
            t_src = float(ad.value(params.T_source))
            assert np.all(temps >= T_AMB - 1e-9)
            assert np.all(temps <= t_src + 1e-9)

    def test_initial_state_is_ambient(self):
        temps = thermal_predict(nominal_params(), THERMAL_GEOMETRY,
                                constant_ambient(), np.array([0.0]))
        assert np.allclose(temps, T_AMB)


class TestDiscretizationLaws:
    def test_spatial_refinement_converges_second_order(self):
        """Linear elements: halving h cuts the spatial error about 4x.

        Sensor heights sit on shared mesh nodes (multiples of L/25) so the
        measured error is the nodal finite-element error alone, not the
        within-element interpolation whose constant shifts under refinement.
        """
        amb = constant_ambient(t_end=30_000.0)
        t_obs = np.array([20_000.0])
        params = nominal_params()

        def solve(n_el):
            geom = ThermalGeometry(radius=0.0286, length=0.0930,
                                   sensor_heights=(0.0372, 0.0744),
                                   n_elements=n_el)
            return thermal_predict(params, geom, amb, t_obs, dt=5.0)

        ref = solve(400)
        e25 = np.abs(solve(25) - ref).max()
        e50 = np.abs(solve(50) - ref).max()
        assert e50 < e25
        assert 2.5 < e25 / e50 < 6.0

    def test_time_step_error_is_first_order(self):
        """Backward Euler: successive step halvings shrink the change 2x."""
        amb = constant_ambient(t_end=30_000.0)
        t_obs = np.array([20_000.0])
        params = nominal_params()
        geom = THERMAL_GEOMETRY

        t40 = thermal_predict(params, geom, amb, t_obs, dt=40.0)
        t20 = thermal_predict(params, geom, amb, t_obs, dt=20.0)
        t10 = thermal_predict(params, geom, amb, t_obs, dt=10.0)
        d1 = np.abs(t40 - t20).max()
        d2 = np.abs(t20 - t10).max()
        assert 1.5 < d1 / d2 < 3.0


class TestSensitivities:
    def test_dual_gradients_match_finite_differences(self):
        amb = constant_ambient(t_end=60_000.0)
        t_obs = np.array([10_000.0, 40_000.0])
        geom = THERMAL_GEOMETRY
        names = ("k", "rho", "cp", "h_source", "h_side", "h_inf", "T_source")
        base = dict(k=0.300, rho=900.0, cp=2500.0, h_source=100.0,
                    h_side=1.0, h_inf=10.0, T_source=40.0)

        seeds = ad.seed([base[n] for n in names])
        dual = thermal_predict(
            ThermalParams(**{n: seeds[i] for i, n in enumerate(names)}),
            geom, amb, t_obs)
        grads = ad.partials(dual)  # (n_sensors, n_obs, 7)

        for i, n in enumerate(names):
            h = 1e-6 * max(abs(base[n]), 1.0)
            hi = dict(base, **{n: base[n] + h})
            lo = dict(base, **{n: base[n] - h})
            fd = (thermal_predict(ThermalParams(**hi), geom, amb, t_obs)
                  - thermal_predict(ThermalParams(**lo), geom, amb, t_obs)) / (2 * h)
            scale = max(np.abs(fd).max(), 1e-12)
            assert np.abs(grads[..., i] - fd).max() / scale < 1e-5

    def test_dual_value_path_matches_plain(self):
        amb = constant_ambient(t_end=30_000.0)
        t_obs = np.array([12_345.0])
        plain = thermal_predict(nominal_params(), THERMAL_GEOMETRY, amb, t_obs)
        seeds = ad.seed([0.300])
        dual = thermal_predict(nominal_params(k=seeds[0]),
                               THERMAL_GEOMETRY, amb, t_obs)
        assert np.array_equal(ad.value(dual), plain)


class TestInterpolation:
    def test_sensor_between_nodes_is_linear_blend(self):
        amb = constant_ambient(t_end=40_000.0)
        t_obs = np.array([30_000.0])
        params = nominal_params()
        hx = 0.0930 / 25
        mid = 3.3 * hx  # between nodes 3 and 4
        geom_mid = ThermalGeometry(0.0286, 0.0930, (mid,), 25)
        geom_nodes = ThermalGeometry(0.0286, 0.0930, (3 * hx, 4 * hx), 25)
        at_mid = thermal_predict(params, geom_mid, amb, t_obs)[0, 0]
        nodes = thermal_predict(params, geom_nodes, amb, t_obs)[:, 0]
        assert at_mid == pytest.approx(0.7 * nodes[0] + 0.3 * nodes[1], rel=1e-12)

    def test_observation_between_steps_is_linear_blend(self):
        amb = constant_ambient(t_end=10_000.0)
        params = nominal_params()
        on_grid = thermal_predict(params, THERMAL_GEOMETRY, amb,
                                  np.array([4000.0, 4020.0]), dt=20.0)
        between = thermal_predict(params, THERMAL_GEOMETRY, amb,
                                  np.array([4005.0]), dt=20.0)
        expected = 0.75 * on_grid[:, 0] + 0.25 * on_grid[:, 1]
        assert np.allclose(between[:, 0], expected, rtol=1e-12)

    def test_time_varying_ambient_feeds_the_boundary(self):
        # a warming ambient must warm the far (ambient-coupled) sensor more
        # than a constant one does
        times = np.arange(0.0, 50_401.0, 60.0)
        warming = AmbientSeries(times, 21.0 + 5.0 * times / times[-1])
        const = constant_ambient(t_end=50_400.0)
        t_obs = np.array([50_000.0])
        params = nominal_params()
        warm = thermal_predict(params, THERMAL_GEOMETRY, warming, t_obs)
        cold = thermal_predict(params, THERMAL_GEOMETRY, const, t_obs)
        assert warm[-1, 0] > cold[-1, 0]


class TestValidation:
    def test_bad_parameters_rejected(self):
        with pytest.raises(ValidationError):
            nominal_params(k=0.0)
        with pytest.raises(ValidationError):
            nominal_params(h_side=-0.1)
        # laterally insulated column is a legal configuration
        nominal_params(h_side=0.0)

    def test_observation_outside_ambient_span_rejected(self):
        amb = constant_ambient(t_end=1000.0)
        with pytest.raises(ValidationError):
            thermal_predict(nominal_params(), THERMAL_GEOMETRY, amb,
                            np.array([2000.0]))

    def test_geometry_validation(self):
        with pytest.raises(ValidationError):
            ThermalGeometry(0.0286, 0.0930, (0.2,), 25)  # sensor above column
        with pytest.raises(ValidationError):
            ThermalGeometry(0.0286, 0.0930, (0.01,), 1)  # too few elements
        with pytest.raises(ValidationError):
            ThermalGeometry(-1.0, 0.0930, (0.01,), 25)

    def test_ambient_series_validation(self):
        with pytest.raises(ValidationError):
            AmbientSeries(np.array([0.0, 0.0]), np.array([21.0, 21.0]))
        with pytest.raises(ValidationError):
            AmbientSeries(np.array([0.0, 1.0]), np.array([21.0, np.nan]))
