"""Forward models at nominal parameters.

Runs the two calibration-grade forward models shipped with the package —
the transient 1-D heat-conduction column and the squeeze-flow film — at
their nominal parameter values, then checks each against an independent
physical invariant: a series-resistance steady state for the thermal
column and volume conservation for the film.

Run:  python3 demos/01_forward_models.py
"""
import math

import numpy as np

from bayescal.models.squeeze import SqueezeParams, squeeze_predict
from bayescal.models.thermal import AmbientSeries, ThermalParams, thermal_predict
from bayescal.systems import THERMAL_GEOMETRY

# --- thermal column ---------------------------------------------------------

params = ThermalParams(k=0.300, rho=900.0, cp=2500.0, h_source=100.0,
                       h_side=1.0, h_inf=10.0, T_source=40.0)
ambient = AmbientSeries(np.array([0.0, 400_000.0]), np.array([21.0, 21.0]))
obs_times = np.array([600.0, 3600.0, 14400.0, 86400.0, 400_000.0])

temps = thermal_predict(params, THERMAL_GEOMETRY, ambient, obs_times, dt=20.0)
print("thermal column: sensor temperatures [deg C]")
print(f"{'t [s]':>10} " + " ".join(f"{h * 1e3:>7.1f}mm"
                                   for h in THERMAL_GEOMETRY.sensor_heights))
for j, t in enumerate(obs_times):
    print(f"{t:>10.0f} " + " ".join(f"{temps[i, j]:>9.3f}"
                                    for i in range(temps.shape[0])))

# Steady state with negligible side losses follows the series-resistance
# formula q = dT / (1/h_source + L/k + 1/h_inf), T(x) = T_source - q/h_source
# - q x / k.  Crank the side film coefficient down and compare.
lossless = ThermalParams(k=0.300, rho=900.0, cp=2500.0, h_source=100.0,
                         h_side=1e-12, h_inf=10.0, T_source=40.0)
steady = thermal_predict(lossless, THERMAL_GEOMETRY, ambient,
                         np.array([400_000.0]), dt=20.0)[:, 0]
q = (40.0 - 21.0) / (1.0 / 100.0 + THERMAL_GEOMETRY.length / 0.300 + 1.0 / 10.0)
analytic = 40.0 - q / 100.0 - q * np.asarray(
    THERMAL_GEOMETRY.sensor_heights) / 0.300
print("\ninsulated steady state vs series-resistance formula:")
for h, got, want in zip(THERMAL_GEOMETRY.sensor_heights, steady, analytic):
    print(f"  x = {h * 1e3:5.1f} mm   solver {got:8.4f}   formula {want:8.4f}"
          f"   rel err {abs(got - want) / want:.2e}")

# --- squeeze-flow film ------------------------------------------------------

sq = SqueezeParams(F=2.8, V=0.20e-6, R0=7.6e-3, eta=0.87,
                   gamma=4.54e-2, alpha=3.0 / 11.0)
obs = np.array([0.05 * (1.5 ** i - 1.0) / 0.5 for i in range(1, 11)])
radii = squeeze_predict(sq, obs, dt=obs.max() * 1e-5)

print("\nsqueeze flow: contact radius growth under constant load")
for t, r in zip(obs, radii):
    h = sq.V / (math.pi * r ** 2)          # film height from volume identity
    vol = math.pi * r ** 2 * h
    print(f"  t = {t:8.4f} s   R = {r * 1e3:7.4f} mm   "
          f"pi R^2 H / V = {vol / sq.V:.12f}")

print("\nvolume is conserved by construction: the film height follows the "
      "constitutive rate\nequation and the radius is derived from it through "
      "pi R^2 H = V at every step.")
