"""Run configuration: a declarative TOML file validated into a RunConfig.

Layout (see README for the full reference):

    [run]      outdir, seed, chains, samplers, prefix_schedule
    [system]   kind = "thermal" | "viscous" | "gaussian-test", integrator options
    [data]     source = "synthetic" | "file", noise/paths
    [mesh]     bins, z, max_reference_cells
    [[priors]] optional rows overriding the system's built-in prior table
    [samplers.mh / .aism / .nuts]  per-sampler settings

Every validation failure raises :class:`~bayescal.errors.ConfigError` naming
the dotted key path.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from ..errors import ConfigError
from ..inference import PriorParameter, PriorSpec, Identity, Log, Logit
from ..probability import Beta, LogNormal, Normal, TruncatedNormal, Uniform

__all__ = ["RunConfig", "SamplerSettings", "load_config", "build_prior_spec",
           "DEFAULT_PREFIX_SCHEDULE", "SAMPLER_ORDER"]

DEFAULT_PREFIX_SCHEDULE = (1_000, 3_000, 10_000, 30_000, 100_000)
SAMPLER_ORDER = ("mh", "aism", "nuts")
_SYSTEMS = ("thermal", "viscous", "gaussian-test")


@dataclass(frozen=True)
class SamplerSettings:
    kind: str
    n_samples: int
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    source_path: Path
    digest: str
    outdir: Path
    seed: int
    chains: int
    system: str
    system_options: dict
    data: dict
    mesh_bins: object
    mesh_z: float
    max_reference_cells: int
    prefix_schedule: tuple
    samplers: dict
    prior_rows: tuple


def _expect_table(raw: dict, key: str, required: bool = False) -> dict:
    val = raw.get(key)
    if val is None:
        if required:
            raise ConfigError(f"{key}: required section missing")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"{key}: expected a table")
    return val


def _get(table: dict, path: str, key: str, kind, required: bool = False,
         default=None):
    if key not in table:
        if required:
            raise ConfigError(f"{path}.{key}: required key missing")
        return default
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    if not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {val!r}")
    return val


def _get_pos_int(table, path, key, required=False, default=None):
    val = _get(table, path, key, int, required, default)
    if val is not None and val < 1:
        raise ConfigError(f"{path}.{key}: must be a positive integer, got {val}")
    return val


def _get_pos_float(table, path, key, required=False, default=None):
    val = _get(table, path, key, float, required, default)
    if val is not None and not val > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {val}")
    return val


def _unknown_keys(table: dict, path: str, known: set):
    extra = set(table) - known
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {sorted(extra)}")


def _validate_sampler(kind: str, table: dict) -> SamplerSettings:
    path = f"samplers.{kind}"
    n = _get_pos_int(table, path, "n_samples", required=True)
    opts = {}
    if kind == "mh":
        _unknown_keys(table, path, {"n_samples", "adapt_samples", "initial_scale"})
        opts["adapt_samples"] = _get_pos_int(table, path, "adapt_samples")
        opts["initial_scale"] = _get_pos_float(table, path, "initial_scale",
                                               default=0.1)
    elif kind == "aism":
        _unknown_keys(table, path, {"n_samples", "walkers", "stretch"})
        opts["walkers"] = _get_pos_int(table, path, "walkers")
        stretch = _get_pos_float(table, path, "stretch", default=2.0)
        if stretch <= 1.0:
            raise ConfigError(f"{path}.stretch: must be > 1, got {stretch}")
        opts["stretch"] = stretch
    elif kind == "nuts":
        _unknown_keys(table, path, {"n_samples", "target_accept", "max_depth",
                                    "adapt_steps", "step_size"})
        ta = _get(table, path, "target_accept", float, default=0.8)
        if not 0.0 < ta < 1.0:
            raise ConfigError(f"{path}.target_accept: must lie in (0, 1), got {ta}")
        opts["target_accept"] = ta
        opts["max_depth"] = _get_pos_int(table, path, "max_depth", default=10)
        adapt = _get(table, path, "adapt_steps", int)
        if adapt is not None and adapt < 0:
            raise ConfigError(f"{path}.adapt_steps: must be >= 0, got {adapt}")
        opts["adapt_steps"] = adapt
        opts["step_size"] = _get_pos_float(table, path, "step_size")
    else:
        raise ConfigError(f"samplers.{kind}: unknown sampler (use one of {SAMPLER_ORDER})")
    return SamplerSettings(kind=kind, n_samples=n, options=opts)


def _validate_prior_row(i: int, row) -> dict:
    path = f"priors[{i}]"
    if not isinstance(row, dict):
        raise ConfigError(f"{path}: expected a table")
    known = {"name", "dist", "mean", "std", "lower", "upper", "a", "b",
             "unit", "transform"}
    _unknown_keys(row, path, known)
    name = _get(row, path, "name", str, required=True)
    dist = _get(row, path, "dist", str, required=True)
    if dist not in ("normal", "truncnormal", "lognormal", "beta", "uniform"):
        raise ConfigError(f"{path}.dist: unknown distribution {dist!r}")
    out = {"name": name, "dist": dist,
           "unit": _get(row, path, "unit", str, default=""),
           "transform": _get(row, path, "transform", str)}
    if out["transform"] not in (None, "identity", "log", "logit"):
        raise ConfigError(f"{path}.transform: unknown transform {out['transform']!r}")
    if dist in ("normal", "truncnormal", "lognormal"):
        out["mean"] = _get(row, path, "mean", float, required=True)
        out["std"] = _get_pos_float(row, path, "std", required=True)
    if dist == "truncnormal":
        out["lower"] = _get(row, path, "lower", float, default=-float("inf"))
        out["upper"] = _get(row, path, "upper", float, default=float("inf"))
    if dist == "beta":
        out["a"] = _get_pos_float(row, path, "a", required=True)
        out["b"] = _get_pos_float(row, path, "b", required=True)
    if dist == "uniform":
        out["lower"] = _get(row, path, "lower", float, required=True)
        out["upper"] = _get(row, path, "upper", float, required=True)
        if not out["upper"] > out["lower"]:
            raise ConfigError(f"{path}: upper must exceed lower")
    return out


def build_prior_spec(rows) -> PriorSpec:
    """Prior table rows (validated dicts) -> PriorSpec."""
    params = []
    for row in rows:
        kind = row["dist"]
        if kind == "normal":
            d = Normal(row["mean"], row["std"])
        elif kind == "truncnormal":
            d = TruncatedNormal(row["mean"], row["std"], row["lower"], row["upper"])
        elif kind == "lognormal":
            d = LogNormal.from_moments(row["mean"], row["std"])
        elif kind == "beta":
            d = Beta(row["a"], row["b"])
        else:
            d = Uniform(row["lower"], row["upper"])
        transform = None
        t = row.get("transform")
        if t == "identity":
            transform = Identity()
        elif t == "log":
            lo, _ = d.support
            transform = Log(lo if lo > -float("inf") else 0.0)
        elif t == "logit":
            lo, hi = d.support
            transform = Logit(lo, hi)
        params.append(PriorParameter(name=row["name"], dist=d,
                                     transform=transform, unit=row.get("unit", "")))
    return PriorSpec(params)


def _validate_data(system: str, table: dict, base: Path) -> dict:
    path = "data"
    known = {"source", "noise_std", "n_obs", "add_noise", "path", "ambient",
             "observations", "errors"}
    _unknown_keys(table, path, known)
    source = _get(table, path, "source", str, default="synthetic")
    if source not in ("synthetic", "file"):
        raise ConfigError(f"data.source: expected 'synthetic' or 'file', got {source!r}")
    out = {"source": source}
    if source == "synthetic":
        out["noise_std"] = _get_pos_float(table, path, "noise_std",
                                          default=0.2 if system == "thermal" else 1e-4)
        out["n_obs"] = _get_pos_int(table, path, "n_obs", default=10)
        out["add_noise"] = _get(table, path, "add_noise", bool, default=True)
    else:
        raw: dict = {}
        if system == "thermal":
            amb = _get(table, path, "ambient", str, required=True)
            obs = _get(table, path, "observations", str, required=True)
            err = _get(table, path, "errors", str)
            out["ambient"] = _resolve_file(base, amb, "data.ambient", raw)
            out["observations"] = _resolve_file(base, obs, "data.observations", raw)
            out["errors"] = (_resolve_file(base, err, "data.errors", raw)
                             if err else None)
        elif system == "viscous":
            p = _get(table, path, "path", str, required=True)
            out["path"] = _resolve_file(base, p, "data.path", raw)
        else:
            raise ConfigError("data.source: gaussian-test has no file data")
        out["n_obs"] = _get_pos_int(table, path, "n_obs", default=10)
        out["relative"] = raw
    return out


def _resolve_file(base: Path, rel: str, path: str, raw: dict) -> Path:
    p = Path(rel)
    if p.is_absolute():
        raw[path.split(".", 1)[1]] = None
    else:
        if ".." in p.parts:
            raise ConfigError(
                f"{path}: relative data paths must stay inside the config "
                f"directory (no '..'); use an absolute path instead: {rel!r}")
        raw[path.split(".", 1)[1]] = str(p)
        p = base / p
    if not p.is_file():
        raise ConfigError(f"{path}: file not found: {p}")
    return p


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = tomli.loads(raw_bytes.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}") from exc
    digest = hashlib.sha256(raw_bytes).hexdigest()

    _unknown_keys(raw, str(path), {"run", "system", "data", "mesh", "priors",
                                   "samplers"})
    run = _expect_table(raw, "run", required=True)
    _unknown_keys(run, "run", {"outdir", "seed", "chains", "samplers",
                               "prefix_schedule"})
    outdir = Path(_get(run, "run", "outdir", str, required=True))
    seed = _get(run, "run", "seed", int, required=True)
    if seed < 0:
        raise ConfigError(f"run.seed: must be >= 0, got {seed}")
    chains = _get_pos_int(run, "run", "chains", default=1)

    schedule = run.get("prefix_schedule", list(DEFAULT_PREFIX_SCHEDULE))
    if (not isinstance(schedule, list) or not schedule
            or any(isinstance(v, bool) or not isinstance(v, int) or v < 2
                   for v in schedule)):
        raise ConfigError("run.prefix_schedule: expected a list of integers >= 2")
    if sorted(schedule) != schedule or len(set(schedule)) != len(schedule):
        raise ConfigError("run.prefix_schedule: must be strictly increasing")

    sys_table = _expect_table(raw, "system", required=True)
    system = _get(sys_table, "system", "kind", str, required=True)
    if system not in _SYSTEMS:
        raise ConfigError(f"system.kind: expected one of {_SYSTEMS}, got {system!r}")
    sys_known = {"kind", "dt"}
    if system == "thermal":
        sys_known |= {"n_elements", "radius", "length", "sensor_heights"}
    if system == "gaussian-test":
        sys_known |= {"dim", "prior_std"}
    _unknown_keys(sys_table, "system", sys_known)
    sys_opts = {}
    sys_opts["dt"] = _get_pos_float(sys_table, "system", "dt")
    if system == "thermal":
        sys_opts["n_elements"] = _get_pos_int(sys_table, "system", "n_elements")
        sys_opts["radius"] = _get_pos_float(sys_table, "system", "radius")
        sys_opts["length"] = _get_pos_float(sys_table, "system", "length")
        heights = sys_table.get("sensor_heights")
        if heights is not None:
            if (not isinstance(heights, list) or not heights
                    or any(not isinstance(v, (int, float)) or isinstance(v, bool)
                           or not v > 0 for v in heights)):
                raise ConfigError(
                    "system.sensor_heights: expected a list of positive numbers")
            sys_opts["sensor_heights"] = tuple(float(v) for v in heights)
    if system == "gaussian-test":
        sys_opts["dim"] = _get_pos_int(sys_table, "system", "dim", default=2)
        sys_opts["prior_std"] = _get_pos_float(sys_table, "system", "prior_std",
                                               default=5.0)

    data = _validate_data(system, _expect_table(raw, "data"), path.parent)

    mesh = _expect_table(raw, "mesh")
    _unknown_keys(mesh, "mesh", {"bins", "z", "max_reference_cells"})
    bins = mesh.get("bins", 32 if system == "gaussian-test" else 8)
    if isinstance(bins, list):
        if not bins or any(isinstance(v, bool) or not isinstance(v, int) or v < 1
                           for v in bins):
            raise ConfigError("mesh.bins: expected positive integers")
        bins = tuple(bins)
    elif isinstance(bins, bool) or not isinstance(bins, int) or bins < 1:
        raise ConfigError(f"mesh.bins: expected a positive integer, got {bins!r}")
    z = _get_pos_float(mesh, "mesh", "z", default=4.0)
    max_cells = _get_pos_int(mesh, "mesh", "max_reference_cells", default=65536)

    samplers_table = _expect_table(raw, "samplers", required=True)
    settings = {}
    for kind in samplers_table:
        settings[kind] = _validate_sampler(kind, _expect_table(samplers_table, kind))
    if not settings:
        raise ConfigError("samplers: at least one sampler section required")

    wanted = run.get("samplers")
    if wanted is not None:
        if (not isinstance(wanted, list) or not wanted
                or any(not isinstance(s, str) for s in wanted)):
            raise ConfigError("run.samplers: expected a list of sampler names")
        for s in wanted:
            if s not in settings:
                raise ConfigError(f"run.samplers: no [samplers.{s}] section configured")
        settings = {k: settings[k] for k in SAMPLER_ORDER if k in wanted}
    else:
        settings = {k: settings[k] for k in SAMPLER_ORDER if k in settings}

    prior_rows = raw.get("priors", [])
    if not isinstance(prior_rows, list):
        raise ConfigError("priors: expected an array of tables ([[priors]])")
    rows = tuple(_validate_prior_row(i, r) for i, r in enumerate(prior_rows))
    names = [r["name"] for r in rows]
    if len(set(names)) != len(names):
        raise ConfigError(f"priors: duplicate parameter names in {names}")

    return RunConfig(
        source_path=path,
        digest=digest,
        outdir=outdir,
        seed=seed,
        chains=chains,
        system=system,
        system_options=sys_opts,
        data=data,
        mesh_bins=bins,
        mesh_z=z,
        max_reference_cells=max_cells,
        prefix_schedule=tuple(schedule),
        samplers=settings,
        prior_rows=rows,
    )
