"""Shared test fixtures.

Campaign-level fixtures write a TOML configuration into a temporary
directory and drive the public entry points (`run_campaign`, `diagnose`,
`kl_report`, `assemble_report`) exactly as the CLI does, so every test sees
the artifacts a user would see.
"""
from __future__ import annotations

import numpy as np
import pytest

from bayescal.harness.campaign import diagnose, kl_report, run_campaign
from bayescal.harness.config import load_config

GAUSS_TOML = """\
[run]
outdir = "out"
seed = 424242
chains = 2

[system]
kind = "gaussian-test"

[mesh]
bins = 16

[samplers.mh]
n_samples = 1200
adapt_samples = 300

[samplers.aism]
n_samples = 4800
walkers = 8
"""


@pytest.fixture(scope="session")
def gauss_campaign(tmp_path_factory):
    """A small completed two-sampler campaign on the closed-form system."""
    root = tmp_path_factory.mktemp("gauss")
    cfg_path = root / "gauss.toml"
    cfg_path.write_text(GAUSS_TOML)
    cfg = load_config(cfg_path)
    result = run_campaign(cfg, log=lambda s: None)
    outdir = result["outdir"]
    diagnose(outdir)
    kl_report(outdir)
    return outdir


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
