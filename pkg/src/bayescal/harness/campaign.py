"""Campaign orchestration: run chains, diagnose them, and assemble reports.

A campaign turns one :class:`~bayescal.harness.config.RunConfig` into a
self-contained artifact directory:

.. code-block:: text

    outdir/
      config.toml          byte copy of the input configuration
      data.csv             the observation vector (label, time, value, std)
      ambient.csv          ambient record (thermal only)
      priors.csv           prior table actually used
      truth.json           generating parameters (synthetic data only)
      failures.json        sampling/burn-in failures ([] when clean)
      chains/<sampler>/chain_00.csv (+ .meta.json)
      chains/aism/chain_00_ensemble.csv   per-round walker means
      reports/burnin.csv ess.csv gelman.csv evals.csv posterior_summary.csv
              predictive.csv kl.csv kl_mesh.json
      report.json          machine-readable summary of everything above

Reproducibility contract: rerunning the same configuration writes
byte-identical chain CSVs and reports (no timestamps anywhere).  Chain RNG
streams derive from ``SeedSequence([seed, sampler_index, chain_index, phase])``
(phase 0 adapts, phase 1 samples) and the synthetic-data stream from
``SeedSequence([seed, 0])``, so every chain is independent and each stage can
be re-executed in isolation.

Diagnostics are evaluated on burn-in-trimmed chains at every prefix length of
the configured schedule (plus the full kept length).  For the ensemble
sampler, scalar diagnostics (burn-in scan, effective sample size,
convergence ratio) run on the per-round ensemble-average chain with the
walker count supplied to the estimators, while per-sample artifacts
(posterior summaries, divergence binning) use the flattened walker chain.

A chain whose burn-in scan fails is kept (``burn_in`` null in its metadata),
recorded in ``failures.json``, and the campaign continues; the CLI maps a
non-empty failure list to a nonzero exit status.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from pathlib import Path

import numpy as np

from ..diagnostics import (bin_reference, bin_sample, build_reference_mesh,
                           detect_burn_in, effective_sample_size,
                           gelman_rubin, geweke_p, kl_divergence,
                           multichain_ess)
from ..errors import ConfigError, ConvergenceError, EvaluationError, ValidationError
from ..inference import PriorSpec, UnconstrainedTarget
from ..models.squeeze import SqueezeParams, squeeze_predict
from ..models.thermal import ThermalParams, thermal_predict
from ..probability import Beta, LogNormal, Normal, TruncatedNormal, Uniform
from ..samplers import (AISMConfig, Chain, MHConfig, NUTSConfig, aism_run,
                        ensemble_average, flatten_walkers, load_chain,
                        mh_adapt, mh_run, nuts_run, save_chain)
from ..systems import (THERMAL_DT, THERMAL_GEOMETRY, make_gaussian_target,
                       make_squeeze_target, make_thermal_target,
                       thermal_prior, viscous_prior)
from .config import RunConfig, SAMPLER_ORDER, build_prior_spec, load_config
from .datasets import ingest_squeeze, ingest_thermal, synth_squeeze, synth_thermal

__all__ = ["run_campaign", "diagnose", "kl_report", "assemble_report",
           "build_system", "resolve_outdir", "SystemBundle", "OUTPUT_ROOT_ENV"]

#: environment variable overriding where relative output directories land
OUTPUT_ROOT_ENV = "BAYESCAL_OUT_ROOT"


# ---------------------------------------------------------------------------
# system construction
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class SystemBundle:
    """Everything a campaign needs about one benchmark system."""

    name: str
    prior: PriorSpec
    obs: object                     # ObservationSet
    obs_times: np.ndarray
    make_target: object             # () -> UnconstrainedTarget (fresh counter)
    predict: object                 # theta (original space) -> prediction vector
    truth: np.ndarray | None
    ambient: object = None          # AmbientSeries (thermal only)

    @property
    def dim(self) -> int:
        return self.prior.dim


def _data_rng(cfg: RunConfig) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))


def _custom_prior(cfg: RunConfig, default: PriorSpec) -> PriorSpec:
    if not cfg.prior_rows:
        return default
    prior = build_prior_spec(cfg.prior_rows)
    if prior.names != default.names:
        raise ConfigError(
            f"priors: parameter rows must redeclare the full table "
            f"{list(default.names)} in order, got {list(prior.names)}")
    return prior


def build_system(cfg: RunConfig) -> SystemBundle:
    """Construct the configured system (dataset, prior, target factory)."""
    if cfg.system == "gaussian-test":
        if cfg.prior_rows:
            raise ConfigError(
                "priors: the gaussian-test system has a fixed analytic "
                "prior; set system.prior_std instead of [[priors]] rows")
        dim = cfg.system_options.get("dim", 2)
        prior_std = cfg.system_options.get("prior_std", 5.0)
        probe = make_gaussian_target(dim, prior_std)

        def make_target():
            return make_gaussian_target(dim, prior_std)

        return SystemBundle(name=cfg.system, prior=probe.prior,
                            obs=probe.target.obs,
                            obs_times=np.arange(dim, dtype=float),
                            make_target=make_target,
                            predict=lambda theta: np.asarray(theta, float),
                            truth=None)

    if cfg.system == "thermal":
        geom = THERMAL_GEOMETRY
        opts = cfg.system_options
        repl = {k: opts[k] for k in ("radius", "length", "n_elements")
                if opts.get(k) is not None}
        if opts.get("sensor_heights") is not None:
            repl["sensor_heights"] = opts["sensor_heights"]
        dt = opts.get("dt") or THERMAL_DT
        if cfg.data["source"] == "synthetic":
            if repl:
                geom = dataclasses.replace(geom, **repl)
            ds, truth = synth_thermal(_data_rng(cfg),
                                      noise_std=cfg.data["noise_std"],
                                      n_obs=cfg.data["n_obs"],
                                      add_noise=cfg.data["add_noise"],
                                      geometry=geom, dt=dt)
        else:
            if "sensor_heights" in repl:
                raise ConfigError(
                    "system.sensor_heights: not allowed with data.source = "
                    "'file' (heights come from the observation header)")
            ds = ingest_thermal(cfg.data["observations"], cfg.data["ambient"],
                                errors=cfg.data["errors"],
                                n_select=cfg.data["n_obs"])
            truth = None
            repl["sensor_heights"] = ds.sensor_heights
            geom = dataclasses.replace(geom, **repl)
        prior = _custom_prior(cfg, thermal_prior())
        obs = ds.observation_set()

        def make_target():
            return make_thermal_target(ds.ambient, ds.obs_times, obs,
                                       geometry=geom, prior=prior, dt=dt)

        def predict(theta):
            return np.asarray(
                thermal_predict(ThermalParams(*theta), geom, ds.ambient,
                                ds.obs_times, dt=dt), dtype=float).ravel()

        return SystemBundle(name=cfg.system, prior=prior, obs=obs,
                            obs_times=ds.obs_times, make_target=make_target,
                            predict=predict, truth=truth, ambient=ds.ambient)

    # viscous squeeze flow
    dt = cfg.system_options.get("dt")
    if cfg.data["source"] == "synthetic":
        ds, truth = synth_squeeze(_data_rng(cfg),
                                  noise_std=cfg.data["noise_std"],
                                  n_obs=cfg.data["n_obs"],
                                  add_noise=cfg.data["add_noise"], dt=dt)
    else:
        ds = ingest_squeeze(cfg.data["path"])
        truth = None
    prior = _custom_prior(cfg, viscous_prior())
    obs = ds.observation_set()

    def make_target():
        return make_squeeze_target(ds.obs_times, obs, prior=prior, dt=dt)

    def predict(theta):
        return np.asarray(squeeze_predict(SqueezeParams(*theta), ds.obs_times,
                                          dt=dt), dtype=float)

    return SystemBundle(name=cfg.system, prior=prior, obs=obs,
                        obs_times=ds.obs_times, make_target=make_target,
                        predict=predict, truth=truth)


# ---------------------------------------------------------------------------
# sampler plans
# ---------------------------------------------------------------------------

def _resolve_plans(cfg: RunConfig, dim: int) -> dict:
    """Concrete per-sampler settings with dimension-dependent defaults.

    All configuration errors surface here, before any chain runs.
    """
    plans = {}
    for kind, s in cfg.samplers.items():
        o = dict(s.options)
        if kind == "mh":
            o["adapt_samples"] = o.get("adapt_samples") or max(2000, 100 * dim)
            if o["adapt_samples"] < 100 * dim:
                raise ConfigError(
                    f"samplers.mh.adapt_samples: needs at least {100 * dim} "
                    f"draws to adapt a {dim}-parameter proposal, got "
                    f"{o['adapt_samples']}")
        elif kind == "aism":
            o["walkers"] = o.get("walkers") or 4 * dim
            if o["walkers"] < dim + 2:
                raise ConfigError(
                    f"samplers.aism.walkers: ensemble needs at least "
                    f"{dim + 2} walkers in {dim} dimensions, got {o['walkers']}")
            if s.n_samples % o["walkers"] or s.n_samples < 2 * o["walkers"]:
                raise ConfigError(
                    f"samplers.aism.n_samples: must be a multiple of "
                    f"walkers={o['walkers']} and at least two rounds, got "
                    f"{s.n_samples}")
        elif kind == "nuts":
            adapt = o.get("adapt_steps")
            if adapt is not None and adapt >= s.n_samples:
                raise ConfigError(
                    f"samplers.nuts.adapt_steps: must be smaller than "
                    f"n_samples={s.n_samples}, got {adapt}")
        plans[kind] = {"n_samples": s.n_samples, **o}
    return plans


def _chain_rng(seed: int, kind: str, m: int, phase: int) -> np.random.Generator:
    s_idx = SAMPLER_ORDER.index(kind) + 1
    return np.random.default_rng(np.random.SeedSequence([seed, s_idx, m, phase]))


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def resolve_outdir(cfg: RunConfig, out_root=None) -> Path:
    """Campaign directory; relative paths land under the output root.

    The root is ``out_root`` if given, else the :data:`OUTPUT_ROOT_ENV`
    environment variable, else the configuration file's directory.
    """
    out = cfg.outdir
    if out.is_absolute():
        return out
    root = out_root or os.environ.get(OUTPUT_ROOT_ENV)
    base = Path(root) if root else cfg.source_path.parent
    return base / out


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


_DIST_FIELDS = {
    Normal: ("normal", lambda d: {"mean": d.mean, "std": d.std}),
    TruncatedNormal: ("truncnormal", lambda d: {"mean": d.mean, "std": d.std,
                                                "lower": d.lower, "upper": d.upper}),
    LogNormal: ("lognormal", lambda d: {"mu_hat": d.mu_hat, "sigma_hat": d.sigma_hat}),
    Beta: ("beta", lambda d: {"a": d.a, "b": d.b}),
    Uniform: ("uniform", lambda d: {"lower": d.lower, "upper": d.upper}),
}


def _write_priors_csv(path, prior: PriorSpec):
    header = ["name", "unit", "dist", "mean", "std", "mu_hat", "sigma_hat",
              "a", "b", "lower", "upper", "transform", "nominal"]
    rows = []
    for p in prior.parameters:
        kind, extract = _DIST_FIELDS[type(p.dist)]
        fields = extract(p.dist)
        rows.append([p.name, p.unit, kind,
                     fields.get("mean", ""), fields.get("std", ""),
                     fields.get("mu_hat", ""), fields.get("sigma_hat", ""),
                     fields.get("a", ""), fields.get("b", ""),
                     fields.get("lower", ""), fields.get("upper", ""),
                     type(p.transform).__name__.lower(), p.dist.nominal()])
    _write_csv(path, header, rows)


def _write_data_csv(path, bundle: SystemBundle):
    obs = bundle.obs
    if obs.cov.ndim == 1:
        std = np.sqrt(obs.cov)
    else:
        std = np.sqrt(np.diag(obs.cov))
    labels = obs.labels or tuple(f"y{i}" for i in range(obs.n))
    n_t = bundle.obs_times.size
    rows = []
    for i in range(obs.n):
        t = bundle.obs_times[i % n_t] if bundle.name == "thermal" else (
            bundle.obs_times[i] if i < n_t else "")
        rows.append([i, labels[i], t, obs.y[i], std[i]])
    _write_csv(path, ["index", "label", "time_s", "value", "std"], rows)


# ---------------------------------------------------------------------------
# run stage
# ---------------------------------------------------------------------------

def _run_one(bundle: SystemBundle, cfg: RunConfig, kind: str, plan: dict,
             m: int) -> dict:
    """Run one chain; returns {'main': Chain, 'ensemble': Chain|None,
    'failure': dict|None}."""
    target = bundle.make_target()
    run_rng = _chain_rng(cfg.seed, kind, m, 1)
    base_meta = {"config_digest": cfg.digest, "system": bundle.name,
                 "chain_index": m}
    ensemble = None
    if kind == "mh":
        adapt_target = bundle.make_target()
        adapt_rng = _chain_rng(cfg.seed, kind, m, 0)
        cov = mh_adapt(adapt_target, plan["adapt_samples"], adapt_rng,
                       initial_scale=plan["initial_scale"])
        chain = mh_run(target, MHConfig(plan["n_samples"], cov), run_rng)
        chain.meta.update(base_meta,
                          adaptation_evals=adapt_target.eval_count,
                          adapt_samples=plan["adapt_samples"])
    elif kind == "aism":
        config = AISMConfig(plan["n_samples"], plan["walkers"],
                            stretch=plan["stretch"])
        walkers_chains = aism_run(target, config, run_rng)
        ensemble = ensemble_average(walkers_chains)
        chain = flatten_walkers(walkers_chains)
        chain.meta.update(base_meta)
        ensemble.meta.update(base_meta)
    else:
        config = NUTSConfig(plan["n_samples"],
                            target_accept=plan["target_accept"],
                            max_depth=plan["max_depth"],
                            adapt_steps=plan["adapt_steps"],
                            step_size=plan["step_size"])
        chain = nuts_run(target, config, run_rng)
        adapt_rows = chain.burn_in or 0
        chain.meta.update(base_meta,
                          adaptation_evals=int(chain.cum_evals[adapt_rows]))
    chain = dataclasses.replace(chain, seed=cfg.seed)
    if ensemble is not None:
        ensemble = dataclasses.replace(ensemble, seed=cfg.seed)

    failure = None
    try:
        if kind == "aism":
            b_rounds = detect_burn_in(ensemble)
            ensemble = dataclasses.replace(ensemble, burn_in=b_rounds)
            chain = dataclasses.replace(
                chain, burn_in=b_rounds * ensemble.walkers)
        elif kind == "mh":
            chain = dataclasses.replace(chain, burn_in=detect_burn_in(chain))
        # NUTS burn-in is its adaptation span, set by the sampler itself.
    except ConvergenceError as exc:
        failure = {"sampler": kind, "chain": m, "stage": "burn-in",
                   "error": str(exc)}
    counter = target.counter
    chain.meta.update(short_circuits=counter.short_circuits,
                      model_failures=counter.failures)
    return {"main": chain, "ensemble": ensemble, "failure": failure}


def run_campaign(cfg: RunConfig, out_root=None, log=None) -> dict:
    """Run all configured chains and persist them under the campaign dir.

    Sampling and burn-in failures are recorded in ``failures.json`` and the
    returned summary; the campaign always continues with the next chain.
    """
    say = log or (lambda msg: None)
    outdir = resolve_outdir(cfg, out_root)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "chains").mkdir(exist_ok=True)

    copy_target = outdir / "config.toml"
    if copy_target.resolve() != cfg.source_path.resolve():
        copy_target.write_bytes(cfg.source_path.read_bytes())
    # Data files referenced by relative paths are copied alongside the config
    # so the output directory stays self-contained: `diagnose`/`kl`/`report`
    # re-load the copied config and must resolve the same files from there.
    for key, rel in cfg.data.get("relative", {}).items():
        if rel is None:
            continue
        src = cfg.data[key]
        dest = outdir / rel
        if dest.resolve() != src.resolve():
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(src.read_bytes())

    bundle = build_system(cfg)
    plans = _resolve_plans(cfg, bundle.dim)

    _write_data_csv(outdir / "data.csv", bundle)
    _write_priors_csv(outdir / "priors.csv", bundle.prior)
    if bundle.ambient is not None:
        _write_csv(outdir / "ambient.csv", ["time_s", "temp_C"],
                   list(zip(bundle.ambient.times, bundle.ambient.temps)))
    if bundle.truth is not None:
        _write_json(outdir / "truth.json",
                    {"theta": dict(zip(bundle.prior.names,
                                       [float(v) for v in bundle.truth]))})

    failures = []
    completed = 0
    t0 = time.perf_counter()
    for kind in cfg.samplers:
        sdir = outdir / "chains" / kind
        sdir.mkdir(exist_ok=True)
        for m in range(cfg.chains):
            say(f"[{bundle.name}] {kind} chain {m} "
                f"(N={plans[kind]['n_samples']}) ...")
            try:
                res = _run_one(bundle, cfg, kind, plans[kind], m)
            except (ConvergenceError, EvaluationError) as exc:
                failures.append({"sampler": kind, "chain": m,
                                 "stage": "sampling", "error": str(exc)})
                say(f"  FAILED: {exc}")
                continue
            save_chain(res["main"], sdir / f"chain_{m:02d}.csv")
            if res["ensemble"] is not None:
                save_chain(res["ensemble"], sdir / f"chain_{m:02d}_ensemble.csv")
            if res["failure"]:
                failures.append(res["failure"])
                say(f"  burn-in scan failed: {res['failure']['error']}")
            else:
                completed += 1

    _write_json(outdir / "failures.json", failures)
    elapsed = time.perf_counter() - t0
    say(f"[{bundle.name}] {completed} chain(s) converged, "
        f"{len(failures)} failure(s), {elapsed:.1f} s")
    return {"outdir": str(outdir), "completed": completed,
            "failures": failures, "elapsed_s": elapsed}


# ---------------------------------------------------------------------------
# loading persisted campaigns
# ---------------------------------------------------------------------------

def _campaign_config(outdir) -> RunConfig:
    outdir = Path(outdir)
    cfg_path = outdir / "config.toml"
    if not cfg_path.is_file():
        raise ConfigError(f"{outdir}: not a campaign directory "
                          f"(missing config.toml)")
    return load_config(cfg_path)


def _load_chains(outdir) -> dict:
    """{sampler: [{'main': Chain, 'ensemble': Chain|None}, ...]} from disk."""
    outdir = Path(outdir)
    groups = {}
    root = outdir / "chains"
    if not root.is_dir():
        raise ConfigError(f"{outdir}: no chains/ directory; run the campaign first")
    for sdir in sorted(root.iterdir()):
        if not sdir.is_dir():
            continue
        entries = []
        for f in sorted(sdir.glob("chain_[0-9][0-9].csv")):
            ens_path = f.with_name(f.stem + "_ensemble.csv")
            entries.append({
                "main": load_chain(f),
                "ensemble": load_chain(ens_path) if ens_path.is_file() else None,
            })
        if entries:
            groups[sdir.name] = entries
    if not groups:
        raise ConfigError(f"{outdir}: chains/ holds no persisted chains")
    return groups


def _analysis_chain(kind: str, entry: dict) -> Chain:
    """Chain used for scalar diagnostics (ensemble average for aism)."""
    if kind == "aism" and entry["ensemble"] is not None:
        return entry["ensemble"]
    return entry["main"]


def _trimmed_states(chain: Chain) -> np.ndarray:
    return chain.states[(chain.burn_in or 0):]


#: diagnostics need a handful of post-burn-in rows to mean anything
_MIN_PREFIX_ROWS = 8


def _prefix_plan(kind: str, entries, schedule) -> list:
    """Per-sampler prefix lengths in recorded samples: schedule + full length."""
    walkers = entries[0]["main"].walkers if kind == "aism" else 1
    if kind == "aism":
        kept = min(_trimmed_states(_analysis_chain(kind, e)).shape[0]
                   for e in entries) * walkers
    else:
        kept = min(_trimmed_states(e["main"]).shape[0] for e in entries)
    ns = [n for n in schedule if n <= kept]
    if kept and (not ns or ns[-1] != kept):
        ns.append(kept)
    return [n for n in ns if n // walkers >= _MIN_PREFIX_ROWS]


def _prefix_evals(kind: str, entries, n_prefix: int) -> int:
    """Total model evaluations spent producing the first ``n_prefix`` kept
    samples, summed over chains.  Burn-in rows are included via the
    cumulative ledger; the separate-phase proposal adaptation of ``mh`` is
    added on top (the other samplers adapt in-chain, already in the ledger).
    """
    total = 0
    for e in entries:
        ch = e["main"]
        b = ch.burn_in or 0
        if kind == "aism":
            k = ch.walkers
            rows = b + (n_prefix // k) * k
        else:
            rows = b + n_prefix
        total += int(ch.cum_evals[min(rows, ch.n) - 1])
        if kind == "mh":
            total += int(ch.meta.get("adaptation_evals", 0))
    return total


# ---------------------------------------------------------------------------
# diagnose stage
# ---------------------------------------------------------------------------

def diagnose(outdir, log=None) -> dict:
    """Compute burn-in, ESS, convergence-ratio, eval, and summary reports."""
    say = log or (lambda msg: None)
    outdir = Path(outdir)
    cfg = _campaign_config(outdir)
    bundle = build_system(cfg)
    groups = _load_chains(outdir)
    rdir = outdir / "reports"
    rdir.mkdir(exist_ok=True)
    names = bundle.prior.names

    burn_rows, eval_rows, ess_rows, gr_rows = [], [], [], []
    summary_rows, pred_rows = [], []
    overview = {}
    for kind, entries in groups.items():
        say(f"diagnosing {kind} ({len(entries)} chain(s)) ...")
        for m, e in enumerate(entries):
            ch, an = e["main"], _analysis_chain(kind, e)
            converged = an.burn_in is not None
            b = an.burn_in or 0
            kept = an.n - b
            p_tail = geweke_p(an.log_post[b:]) if kept >= 20 else math.nan
            burn_rows.append([kind, m, an.walkers, an.n, b,
                              ch.burn_in or 0, converged, p_tail])
            nuts_extra = [ch.meta.get("divergences", ""),
                          ch.meta.get("max_depth_hits", ""),
                          ch.meta.get("step_size", "")]
            # mh adapts its proposal on a separate target, so those evals sit
            # outside the chain ledger; nuts adaptation is in-chain (included).
            eval_rows.append([kind, m, ch.n, int(ch.cum_evals[-1]),
                              int(ch.meta.get("adaptation_evals", 0)),
                              1 if kind == "nuts" else 0,
                              int(ch.meta.get("short_circuits", 0)),
                              int(ch.meta.get("model_failures", 0)),
                              *nuts_extra])

        walkers = entries[0]["main"].walkers if kind == "aism" else 1
        prefixes = _prefix_plan(kind, entries, cfg.prefix_schedule)
        ess_full = {}
        rhat_full = {}
        for n_prefix in prefixes:
            rounds = n_prefix // walkers if kind == "aism" else n_prefix
            seqs_by_param = []
            for j in range(len(names)):
                seqs = [_trimmed_states(_analysis_chain(kind, e))[:rounds, j]
                        for e in entries]
                seqs_by_param.append(seqs)
            evals_here = _prefix_evals(kind, entries, n_prefix)
            n_used = (rounds * walkers) * len(entries)
            for j, pname in enumerate(names):
                seqs = seqs_by_param[j]
                try:
                    if len(seqs) >= 2:
                        ess = multichain_ess(seqs) * walkers
                        rhat = gelman_rubin(
                            seqs,
                            walkers=([walkers] * len(seqs)
                                     if kind == "aism" else None))
                    else:
                        ess = effective_sample_size(seqs[0]) * walkers
                        rhat = math.nan
                except (ValidationError, EvaluationError):
                    ess, rhat = math.nan, math.nan
                ess_rows.append([kind, pname, n_prefix, n_used, ess,
                                 ess / n_used, ess / evals_here, evals_here])
                gr_rows.append([kind, pname, n_prefix, rhat])
                if n_prefix == prefixes[-1]:
                    ess_full[pname] = ess
                    rhat_full[pname] = rhat

        pooled = np.vstack([_trimmed_states(e["main"]) for e in entries])
        pooled_orig = pooled
        for j, pname in enumerate(names):
            col = pooled_orig[:, j]
            q05, q50, q95 = np.quantile(col, [0.05, 0.50, 0.95])
            summary_rows.append([kind, pname, col.mean(), col.std(ddof=1),
                                 q05, q50, q95])
        theta_hat = pooled_orig.mean(axis=0)
        pred = bundle.predict(theta_hat)
        labels = bundle.obs.labels or tuple(f"y{i}" for i in range(bundle.obs.n))
        for i in range(bundle.obs.n):
            pred_rows.append([kind, i, labels[i], bundle.obs.y[i], pred[i]])
        ess_vals = [v for v in ess_full.values() if not math.isnan(v)]
        rhat_vals = [v for v in rhat_full.values() if not math.isnan(v)]
        overview[kind] = {
            "ess_min": min(ess_vals) if ess_vals else None,
            "rhat_max": max(rhat_vals) if rhat_vals else None,
        }

    _write_csv(rdir / "burnin.csv",
               ["sampler", "chain", "walkers", "n_rows", "burn_in",
                "burn_in_samples", "converged", "geweke_p_after"],
               burn_rows)
    _write_csv(rdir / "evals.csv",
               ["sampler", "chain", "n_rows", "total_evals",
                "adaptation_evals", "adaptation_included", "short_circuits",
                "model_failures", "divergences", "max_depth_hits",
                "step_size"],
               eval_rows)
    _write_csv(rdir / "ess.csv",
               ["sampler", "param", "n_prefix", "n_used", "ess",
                "ess_per_sample", "ess_per_eval", "evals"],
               ess_rows)
    _write_csv(rdir / "gelman.csv",
               ["sampler", "param", "n_prefix", "rhat"], gr_rows)
    _write_csv(rdir / "posterior_summary.csv",
               ["sampler", "param", "mean", "std", "q05", "q50", "q95"],
               summary_rows)
    _write_csv(rdir / "predictive.csv",
               ["sampler", "index", "label", "observed", "predicted"],
               pred_rows)
    say(f"reports written to {rdir}")
    return overview


# ---------------------------------------------------------------------------
# divergence (KL) stage
# ---------------------------------------------------------------------------

def _reference_logpdf(target):
    """Batch wrapper over the posterior density in original coordinates."""
    def f(points):
        out = np.empty(len(points))
        for i, row in enumerate(points):
            out[i] = target.log_posterior(row)
        return out
    return f


def kl_report(outdir, bins=None, z=None, max_cells=None, log=None) -> dict:
    """Binned KL divergence of every sampler against the posterior reference.

    The mesh spans the pooled burn-in-trimmed chains of all samplers; the
    reference is the posterior density evaluated at cell centroids (one model
    evaluation per cell, tallied separately from the chains' ledger).
    """
    say = log or (lambda msg: None)
    outdir = Path(outdir)
    cfg = _campaign_config(outdir)
    bundle = build_system(cfg)
    groups = _load_chains(outdir)
    rdir = outdir / "reports"
    rdir.mkdir(exist_ok=True)

    bins = bins if bins is not None else cfg.mesh_bins
    z = z if z is not None else cfg.mesh_z
    max_cells = max_cells if max_cells is not None else cfg.max_reference_cells

    pooled = np.vstack([_trimmed_states(e["main"])
                        for entries in groups.values() for e in entries])
    mesh = build_reference_mesh(pooled, bins=bins, z=z)
    if mesh.cells > max_cells:
        raise ValidationError(
            f"reference mesh has {mesh.cells} cells, above the configured "
            f"limit {max_cells}; lower mesh.bins or raise "
            f"mesh.max_reference_cells")
    say(f"evaluating posterior reference on {mesh.cells} cells ...")
    ref_target = bundle.make_target().target
    reference = bin_reference(mesh, _reference_logpdf(ref_target))
    ref_evals = ref_target.eval_count

    rows = []
    for kind, entries in groups.items():
        prefixes = _prefix_plan(kind, entries, cfg.prefix_schedule)
        walkers = entries[0]["main"].walkers if kind == "aism" else 1
        for n_prefix in prefixes:
            rows_per_chain = (n_prefix // walkers) * walkers
            states = np.vstack([_trimmed_states(e["main"])[:rows_per_chain]
                                for e in entries])
            binned = bin_sample(mesh, states)
            try:
                kl = kl_divergence(binned, reference)
            except EvaluationError:
                kl = math.inf
            rows.append([kind, n_prefix, states.shape[0], binned.n_inside,
                         _prefix_evals(kind, entries, n_prefix), kl,
                         binned.coverage])
    _write_csv(rdir / "kl.csv",
               ["sampler", "n_prefix", "n_pooled", "n_inside", "evals",
                "kl", "coverage"],
               rows)
    _write_json(rdir / "kl_mesh.json", {
        "bins": list(mesh.bins),
        "z": z,
        "cells": mesh.cells,
        "reference_evals": ref_evals,
        "params": list(bundle.prior.names),
        "edges": {name: [float(v) for v in mesh.edges[d]]
                  for d, name in enumerate(bundle.prior.names)},
    })
    say(f"kl.csv written ({len(rows)} rows, reference {ref_evals} evals)")
    return {"cells": mesh.cells, "reference_evals": ref_evals}


# ---------------------------------------------------------------------------
# report stage
# ---------------------------------------------------------------------------

def _read_csv_rows(path) -> list:
    if not Path(path).is_file():
        return []
    with open(path, encoding="utf-8") as f:
        return list(csv.DictReader(f))


def assemble_report(outdir, log=None) -> dict:
    """Merge per-stage artifacts into ``report.json`` and return it."""
    say = log or (lambda msg: None)
    outdir = Path(outdir)
    cfg = _campaign_config(outdir)
    rdir = outdir / "reports"
    failures = []
    fpath = outdir / "failures.json"
    if fpath.is_file():
        failures = json.loads(fpath.read_text())

    burn = _read_csv_rows(rdir / "burnin.csv")
    evals = _read_csv_rows(rdir / "evals.csv")
    ess = _read_csv_rows(rdir / "ess.csv")
    gelman = _read_csv_rows(rdir / "gelman.csv")
    kl = _read_csv_rows(rdir / "kl.csv")

    samplers = {}
    for kind in cfg.samplers:
        rows_b = [r for r in burn if r["sampler"] == kind]
        rows_e = [r for r in evals if r["sampler"] == kind]
        if not rows_b:
            continue
        last_n = max(int(r["n_prefix"]) for r in ess if r["sampler"] == kind) \
            if any(r["sampler"] == kind for r in ess) else None
        ess_min = min((float(r["ess"]) for r in ess
                       if r["sampler"] == kind and int(r["n_prefix"]) == last_n),
                      default=None) if last_n else None
        rhat_vals = [float(r["rhat"]) for r in gelman
                     if r["sampler"] == kind and int(r["n_prefix"]) == last_n
                     and r["rhat"] != "nan"] if last_n else []
        kl_rows = [r for r in kl if r["sampler"] == kind]
        kl_final = float(kl_rows[-1]["kl"]) if kl_rows else None
        samplers[kind] = {
            "n_samples": cfg.samplers[kind].n_samples,
            "chains": len(rows_b),
            "converged_chains": sum(int(r["converged"]) for r in rows_b),
            "burn_in": [int(r["burn_in_samples"]) for r in rows_b],
            "total_evals": sum(int(r["total_evals"]) for r in rows_e),
            "adaptation_evals": sum(int(r["adaptation_evals"]) for r in rows_e),
            "ess_min": ess_min,
            "rhat_max": max(rhat_vals) if rhat_vals else None,
            "kl_final": kl_final,
        }

    expected = len(cfg.samplers) * cfg.chains
    present = sum(s["chains"] for s in samplers.values())
    converged = sum(s["converged_chains"] for s in samplers.values())
    report = {
        "schema": 1,
        "system": cfg.system,
        "seed": cfg.seed,
        "chains_per_sampler": cfg.chains,
        "config_digest": cfg.digest,
        "prefix_schedule": list(cfg.prefix_schedule),
        "samplers": samplers,
        "failures": failures,
        "chains_expected": expected,
        "chains_present": present,
        "chains_converged": converged,
        "all_completed": not failures and present == expected,
        "artifacts": sorted(
            str(p.relative_to(outdir))
            for p in outdir.rglob("*")
            if p.is_file() and p.name != "report.json"),
    }
    _write_json(outdir / "report.json", report)
    say(f"report.json written ({present}/{expected} chains, "
        f"{converged} converged)")
    return report
