"""Dataset ingestion and synthetic data generation.

CSV conventions (documented in the README; all files are plain comma-separated
text with one header line):

* ambient file: columns ``time_s, temp_C``;
* thermal observation file: column ``time_s`` plus one column per sensor
  named ``T_<height>mm_C`` (e.g. ``T_5.0mm_C``) -- sensor heights are parsed
  from the header and converted to meters;
* optional thermal error file: same header layout, per-reading standard
  deviations in deg C;
* squeeze-flow file: column ``time_s`` plus either repetition columns
  ``radius_mm_rep1, radius_mm_rep2, ...`` (at least two) or a single
  ``radius_mm`` column accompanied by ``radius_std_mm``.

All unit conversion happens here, at ingestion: millimeters become meters and
derived covariances are in m^2.  Downstream code only ever sees SI values.
Parse and consistency failures raise :class:`~bayescal.errors.ValidationError`
naming the file and the 1-based physical line number.

Long thermal logs are down-selected to ``n_select`` readings per sensor by
keeping, for each of ``n_select`` equally spaced target instants, the reading
whose timestamp is nearest (earliest wins ties).

The empirical covariance of a repetition file is rank-deficient whenever the
number of repetitions does not exceed the number of instants (10 repetitions
over 10 instants have rank 9), so a small documented ridge
``COV_RIDGE_ABS + COV_RIDGE_REL * mean(diag)`` is added to the diagonal to
keep it positive definite.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..inference import ObservationSet, PriorSpec
from ..models.squeeze import SqueezeParams, squeeze_predict
from ..models.thermal import AmbientSeries, ThermalGeometry, ThermalParams, thermal_predict
from ..systems import THERMAL_DT, THERMAL_GEOMETRY, thermal_prior, viscous_prior

__all__ = [
    "DatasetThermal", "DatasetSqueeze",
    "ingest_ambient", "ingest_thermal", "ingest_squeeze",
    "synth_thermal", "synth_squeeze",
    "select_uniform_times", "COV_RIDGE_ABS", "COV_RIDGE_REL",
]

#: diagonal ridge added to empirical repetition covariances (absolute, m^2)
COV_RIDGE_ABS = 1e-12
#: diagonal ridge added to empirical repetition covariances (relative to mean diag)
COV_RIDGE_REL = 1e-6

_MM = 1e-3


# ---------------------------------------------------------------------------
# low-level CSV reading with line-numbered errors
# ---------------------------------------------------------------------------

def _read_table(path) -> tuple:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise ValidationError(f"{path.name}: file is empty")
    header = [h.strip() for h in lines[0].split(",")]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise ValidationError(f"{path.name} row 1: malformed header {header}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValidationError(
                f"{path.name} row {lineno}: expected {len(header)} fields, "
                f"got {len(parts)}")
        vals = []
        for name, part in zip(header, parts):
            try:
                v = float(part)
            except ValueError:
                raise ValidationError(
                    f"{path.name} row {lineno}: column {name!r} is not a "
                    f"number: {part.strip()!r}") from None
            if not math.isfinite(v):
                raise ValidationError(
                    f"{path.name} row {lineno}: column {name!r} is not "
                    f"finite: {part.strip()!r}")
            vals.append(v)
        rows.append((lineno, vals))
    if not rows:
        raise ValidationError(f"{path.name}: no data rows")
    linenos = [r[0] for r in rows]
    data = np.array([r[1] for r in rows], dtype=float)
    return header, data, linenos


def _require_ascending(times, linenos, path, column="time_s"):
    d = np.diff(times)
    bad = np.nonzero(~(d > 0.0))[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise ValidationError(
            f"{Path(path).name} row {linenos[i]}: {column} must be strictly "
            f"ascending, got {float(times[i])!r} after {float(times[i - 1])!r}")


def _column(header, name, path):
    try:
        return header.index(name)
    except ValueError:
        raise ValidationError(
            f"{Path(path).name}: missing required column {name!r} "
            f"(found {header})") from None


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetThermal:
    """Thermal calibration data: ambient record plus sensor readings."""

    ambient: AmbientSeries
    obs_times: np.ndarray          # (n_t,) seconds
    sensor_heights: tuple          # meters, one per sensor row
    temps: np.ndarray              # (n_sensors, n_t) deg C
    noise_std: np.ndarray          # (n_sensors, n_t) deg C

    def __post_init__(self):
        t = np.asarray(self.obs_times, dtype=float)
        temps = np.asarray(self.temps, dtype=float)
        std = np.asarray(self.noise_std, dtype=float)
        n_s = len(self.sensor_heights)
        if t.ndim != 1 or t.size == 0 or not np.all(np.diff(t) > 0.0):
            raise ValidationError("obs_times must be strictly ascending")
        if temps.shape != (n_s, t.size) or std.shape != temps.shape:
            raise ValidationError(
                f"temps/noise_std must have shape ({n_s}, {t.size})")
        if not np.all(std > 0.0):
            raise ValidationError("noise_std entries must be positive")
        object.__setattr__(self, "obs_times", t)
        object.__setattr__(self, "temps", temps)
        object.__setattr__(self, "noise_std", std)
        object.__setattr__(self, "sensor_heights",
                           tuple(float(h) for h in self.sensor_heights))

    def observation_set(self) -> ObservationSet:
        """Sensor-major flattened observations with diagonal noise."""
        labels = tuple(
            f"T_{1e3 * h:g}mm@{t:g}s"
            for h in self.sensor_heights for t in self.obs_times)
        return ObservationSet(self.temps.ravel(), self.noise_std.ravel() ** 2,
                              labels=labels)


@dataclass(frozen=True)
class DatasetSqueeze:
    """Squeeze-flow calibration data: mean contact radii over repetitions."""

    obs_times: np.ndarray          # (n_t,) seconds
    radii: np.ndarray              # (n_t,) meters (mean over repetitions)
    cov: np.ndarray                # (n_t,) variances or (n_t, n_t) matrix, m^2
    n_reps: int = 1

    def __post_init__(self):
        t = np.asarray(self.obs_times, dtype=float)
        r = np.asarray(self.radii, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if t.ndim != 1 or t.size == 0 or not np.all(np.diff(t) > 0.0):
            raise ValidationError("obs_times must be strictly ascending")
        if r.shape != t.shape or not np.all(r > 0.0):
            raise ValidationError("radii must be positive, one per instant")
        if cov.shape not in ((t.size,), (t.size, t.size)):
            raise ValidationError("cov must be (n,) variances or (n, n) matrix")
        object.__setattr__(self, "obs_times", t)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "cov", cov)

    def observation_set(self) -> ObservationSet:
        labels = tuple(f"r@{t:g}s" for t in self.obs_times)
        return ObservationSet(self.radii, self.cov, labels=labels)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def ingest_ambient(path) -> AmbientSeries:
    """Read an ambient-temperature record (columns ``time_s, temp_C``)."""
    header, data, linenos = _read_table(path)
    it = _column(header, "time_s", path)
    iv = _column(header, "temp_C", path)
    _require_ascending(data[:, it], linenos, path)
    return AmbientSeries(data[:, it], data[:, iv])


_SENSOR_RE = re.compile(r"^T_([0-9]+(?:\.[0-9]+)?)mm_C$")


def _sensor_columns(header, path):
    cols, heights = [], []
    for j, name in enumerate(header):
        m = _SENSOR_RE.match(name)
        if m:
            cols.append(j)
            heights.append(float(m.group(1)) * _MM)
    if not cols:
        raise ValidationError(
            f"{Path(path).name}: no sensor columns matching 'T_<height>mm_C' "
            f"(found {header})")
    return cols, heights


def select_uniform_times(times: np.ndarray, n_select: int) -> np.ndarray:
    """Indices of readings nearest to ``n_select`` equally spaced instants.

    Targets span ``[times[0], times[-1]]`` inclusive; for each target the
    reading with the smallest absolute time difference is kept (the earlier
    reading on an exact tie).  Duplicate picks collapse, so fewer than
    ``n_select`` indices come back only when the log is shorter or much
    coarser than the requested grid.
    """
    times = np.asarray(times, dtype=float)
    if n_select < 1:
        raise ValidationError(f"n_select must be >= 1, got {n_select}")
    if times.size <= n_select:
        return np.arange(times.size)
    targets = np.linspace(times[0], times[-1], n_select)
    right = np.searchsorted(times, targets)
    right = np.clip(right, 1, times.size - 1)
    left = right - 1
    pick = np.where(times[right] - targets < targets - times[left], right, left)
    return np.unique(pick)


def ingest_thermal(observations, ambient, errors=None, n_select: int = 10,
                   default_std: float = 0.2) -> DatasetThermal:
    """Read thermal sensor logs and down-select to ``n_select`` instants.

    ``observations`` holds the sensor readings, ``ambient`` the ambient
    record; ``errors`` optionally holds per-reading standard deviations with
    the same header layout (absent readings fall back to ``default_std``).
    """
    amb = ingest_ambient(ambient)
    header, data, linenos = _read_table(observations)
    it = _column(header, "time_s", observations)
    cols, heights = _sensor_columns(header, observations)
    times = data[:, it]
    _require_ascending(times, linenos, observations)

    keep = select_uniform_times(times, n_select)
    obs_times = times[keep]
    temps = data[np.ix_(keep, cols)].T  # (n_sensors, n_t)

    std = np.full_like(temps, float(default_std))
    if errors is not None:
        eh, edata, elinenos = _read_table(errors)
        eit = _column(eh, "time_s", errors)
        etimes = edata[:, eit]
        _require_ascending(etimes, elinenos, errors)
        if etimes.shape != times.shape or not np.allclose(etimes, times):
            raise ValidationError(
                f"{Path(errors).name}: time_s column does not match "
                f"{Path(observations).name}")
        ecols = [_column(eh, header[j], errors) for j in cols]
        std = edata[np.ix_(keep, ecols)].T
        bad = np.nonzero(~(std > 0.0))
        if bad[0].size:
            row = int(keep[bad[1][0]])
            raise ValidationError(
                f"{Path(errors).name} row {elinenos[row]}: standard "
                f"deviations must be positive")

    order = np.argsort(heights, kind="stable")
    return DatasetThermal(ambient=amb, obs_times=obs_times,
                          sensor_heights=[heights[i] for i in order],
                          temps=temps[order], noise_std=std[order])


_REP_RE = re.compile(r"^radius_mm_rep([0-9]+)$")


def ingest_squeeze(path) -> DatasetSqueeze:
    """Read a squeeze-flow radius log (millimeters -> meters at ingestion).

    With repetition columns the observation vector is the repetition mean and
    the noise model is the ridge-regularized empirical covariance across
    repetitions (ddof = 1).  With a single ``radius_mm`` column a
    ``radius_std_mm`` column must supply per-instant standard deviations.
    """
    header, data, linenos = _read_table(path)
    it = _column(header, "time_s", path)
    times = data[:, it]
    _require_ascending(times, linenos, path)

    reps = sorted(
        ((int(m.group(1)), j) for j, name in enumerate(header)
         if (m := _REP_RE.match(name))))
    if reps:
        cols = [j for _, j in reps]
        radii_mm = data[:, cols]  # (n_t, n_reps)
        _require_positive_radii(radii_mm, linenos, path,
                                [header[j] for j in cols])
        if len(cols) < 2:
            raise ValidationError(
                f"{Path(path).name}: found a single repetition column "
                f"{header[cols[0]]!r}; at least two repetitions are needed "
                f"for an empirical covariance (or provide radius_std_mm)")
        radii = radii_mm.mean(axis=1) * _MM
        cov = np.cov(radii_mm * _MM, rowvar=True, ddof=1)
        cov = np.atleast_2d(cov)
        ridge = COV_RIDGE_ABS + COV_RIDGE_REL * float(np.mean(np.diag(cov)))
        cov = cov + ridge * np.eye(times.size)
        return DatasetSqueeze(obs_times=times, radii=radii, cov=cov,
                              n_reps=len(cols))

    ir = _column(header, "radius_mm", path)
    istd = _column(header, "radius_std_mm", path)
    _require_positive_radii(data[:, [ir]], linenos, path, ["radius_mm"])
    std = data[:, istd]
    bad = np.nonzero(~(std > 0.0))[0]
    if bad.size:
        raise ValidationError(
            f"{Path(path).name} row {linenos[int(bad[0])]}: radius_std_mm "
            f"must be positive, got {std[int(bad[0])]!r}")
    return DatasetSqueeze(obs_times=times, radii=data[:, ir] * _MM,
                          cov=(std * _MM) ** 2, n_reps=1)


def _require_positive_radii(radii_mm, linenos, path, colnames):
    bad = np.nonzero(~(radii_mm > 0.0))
    if bad[0].size:
        i, j = int(bad[0][0]), int(bad[1][0])
        raise ValidationError(
            f"{Path(path).name} row {linenos[i]}: column {colnames[j]!r} "
            f"must be a positive radius, got {float(radii_mm[i, j])!r}")


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def _nominal(prior: PriorSpec) -> np.ndarray:
    """Central parameter draw used as synthetic ground truth."""
    return np.array([p.dist.nominal() for p in prior.parameters])


def synth_thermal(rng: np.random.Generator, noise_std: float = 0.2,
                  n_obs: int = 10, add_noise: bool = True,
                  geometry: ThermalGeometry = THERMAL_GEOMETRY,
                  dt: float = THERMAL_DT,
                  theta_true: np.ndarray | None = None):
    """Synthetic thermal dataset drawn around the prior-nominal parameters.

    The ambient record is a 14-hour slow oscillation sampled once a minute:
    ``21 + 0.8 sin(2 pi t / 25000)`` for ``t`` in ``[0, 50400]`` s.
    Observation instants are ``n_obs`` equally spaced times ending at the
    final ambient instant (the first at ``t_end / n_obs``).  Returns
    ``(dataset, theta_true)``; with ``add_noise=False`` readings equal the
    model output exactly while the noise model keeps variance
    ``noise_std**2``.
    """
    if not noise_std > 0.0:
        raise ValidationError(f"noise_std must be positive, got {noise_std}")
    prior = thermal_prior()
    theta = _nominal(prior) if theta_true is None else np.asarray(theta_true, float)
    if theta.shape != (prior.dim,):
        raise ValidationError(f"theta_true must have shape ({prior.dim},)")
    t_end = 50400.0
    amb_times = np.arange(0.0, t_end + 1.0, 60.0)
    ambient = AmbientSeries(amb_times, 21.0 + 0.8 * np.sin(2.0 * np.pi * amb_times / 25000.0))
    obs_times = np.linspace(t_end / n_obs, t_end, n_obs)
    params = ThermalParams(*theta)
    temps = thermal_predict(params, geometry, ambient, obs_times, dt=dt)
    temps = np.asarray(temps, dtype=float)
    if add_noise:
        temps = temps + noise_std * rng.standard_normal(temps.shape)
    std = np.full(temps.shape, float(noise_std))
    ds = DatasetThermal(ambient=ambient, obs_times=obs_times,
                        sensor_heights=geometry.sensor_heights,
                        temps=temps, noise_std=std)
    return ds, theta


def synth_squeeze(rng: np.random.Generator, noise_std: float = 1e-4,
                  n_obs: int = 10, add_noise: bool = True,
                  dt: float | None = None,
                  theta_true: np.ndarray | None = None):
    """Synthetic squeeze-flow dataset around the prior-nominal parameters.

    Observation instants grow geometrically, ``0.05 (1.5^i - 1) / 0.5`` for
    ``i = 1..n_obs`` (early compression resolved finely, late plateau
    sparsely).  Returns ``(dataset, theta_true)``; with ``add_noise=False``
    the radii equal the model output exactly while the noise model keeps
    variance ``noise_std**2``.
    """
    if not noise_std > 0.0:
        raise ValidationError(f"noise_std must be positive, got {noise_std}")
    prior = viscous_prior()
    theta = _nominal(prior) if theta_true is None else np.asarray(theta_true, float)
    if theta.shape != (prior.dim,):
        raise ValidationError(f"theta_true must have shape ({prior.dim},)")
    i = np.arange(1, n_obs + 1, dtype=float)
    obs_times = 0.05 * (1.5 ** i - 1.0) / 0.5
    radii = np.asarray(squeeze_predict(SqueezeParams(*theta), obs_times, dt=dt),
                       dtype=float)
    if add_noise:
        radii = radii + noise_std * rng.standard_normal(radii.shape)
    ds = DatasetSqueeze(obs_times=obs_times, radii=radii,
                        cov=np.full(n_obs, float(noise_std) ** 2), n_reps=1)
    return ds, theta
