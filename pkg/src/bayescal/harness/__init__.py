"""Campaign harness: declarative configs, datasets, orchestration, CLI."""
from .campaign import (OUTPUT_ROOT_ENV, SystemBundle, assemble_report,
                       build_system, diagnose, kl_report, resolve_outdir,
                       run_campaign)
from .config import (DEFAULT_PREFIX_SCHEDULE, RunConfig, SamplerSettings,
                     build_prior_spec, load_config)
from .datasets import (COV_RIDGE_ABS, COV_RIDGE_REL, DatasetSqueeze,
                       DatasetThermal, ingest_ambient, ingest_squeeze,
                       ingest_thermal, select_uniform_times, synth_squeeze,
                       synth_thermal)

__all__ = [
    "OUTPUT_ROOT_ENV", "SystemBundle", "assemble_report", "build_system",
    "diagnose", "kl_report", "resolve_outdir", "run_campaign",
    "DEFAULT_PREFIX_SCHEDULE", "RunConfig", "SamplerSettings",
    "build_prior_spec", "load_config",
    "COV_RIDGE_ABS", "COV_RIDGE_REL", "DatasetSqueeze", "DatasetThermal",
    "ingest_ambient", "ingest_squeeze", "ingest_thermal",
    "select_uniform_times", "synth_squeeze", "synth_thermal",
]
