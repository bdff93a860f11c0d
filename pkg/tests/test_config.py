"""TOML run-configuration parsing and validation."""
import hashlib

import numpy as np
import pytest

from bayescal.errors import ConfigError
from bayescal.harness.config import (DEFAULT_PREFIX_SCHEDULE, SAMPLER_ORDER,
                                     build_prior_spec, load_config)
from bayescal.inference import Identity, Log, Logit
from bayescal.probability import (Beta, LogNormal, Normal, TruncatedNormal,
                                  Uniform)

MINIMAL = """\
[run]
outdir = "out"
seed = 7

[system]
kind = "gaussian-test"

[samplers.mh]
n_samples = 500
"""


def cfg_file(tmp_path, text=MINIMAL, name="config.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def load_err(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(cfg_file(tmp_path, text))


class TestValidConfigs:
    def test_minimal_defaults(self, tmp_path):
        cfg = load_config(cfg_file(tmp_path))
        assert cfg.seed == 7
        assert cfg.chains == 1
        assert cfg.system == "gaussian-test"
        assert cfg.prefix_schedule == DEFAULT_PREFIX_SCHEDULE
        assert cfg.mesh_bins == 32       # gaussian-test default
        assert cfg.mesh_z == 4.0
        assert cfg.max_reference_cells == 65536
        assert cfg.system_options["dim"] == 2
        assert cfg.system_options["prior_std"] == 5.0
        assert list(cfg.samplers) == ["mh"]
        assert cfg.samplers["mh"].n_samples == 500
        assert cfg.samplers["mh"].options["initial_scale"] == 0.1
        assert cfg.data == {"source": "synthetic", "noise_std": 1e-4,
                            "n_obs": 10, "add_noise": True}

    def test_digest_is_sha256_of_bytes(self, tmp_path):
        p = cfg_file(tmp_path)
        cfg = load_config(p)
        assert cfg.digest == hashlib.sha256(p.read_bytes()).hexdigest()

    def test_sampler_sections_ordered_canonically(self, tmp_path):
        text = MINIMAL + """
[samplers.nuts]
n_samples = 100

[samplers.aism]
n_samples = 200
walkers = 8
"""
        cfg = load_config(cfg_file(tmp_path, text))
        assert list(cfg.samplers) == list(SAMPLER_ORDER)
        assert cfg.samplers["aism"].options["walkers"] == 8
        assert cfg.samplers["nuts"].options["target_accept"] == 0.8
        assert cfg.samplers["nuts"].options["max_depth"] == 10

    def test_run_samplers_filters_sections(self, tmp_path):
        text = MINIMAL.replace('seed = 7', 'seed = 7\nsamplers = ["mh"]') + """
[samplers.nuts]
n_samples = 100
"""
        cfg = load_config(cfg_file(tmp_path, text))
        assert list(cfg.samplers) == ["mh"]

    def test_mesh_bins_list_becomes_tuple(self, tmp_path):
        text = MINIMAL + "\n[mesh]\nbins = [4, 8]\nz = 3.0\n"
        cfg = load_config(cfg_file(tmp_path, text))
        assert cfg.mesh_bins == (4, 8)
        assert cfg.mesh_z == 3.0

    def test_thermal_system_options(self, tmp_path):
        text = """\
[run]
outdir = "out"
seed = 1

[system]
kind = "thermal"
dt = 10.0
n_elements = 50
sensor_heights = [0.005, 0.045]

[samplers.mh]
n_samples = 100
"""
        cfg = load_config(cfg_file(tmp_path, text))
        assert cfg.system_options["dt"] == 10.0
        assert cfg.system_options["n_elements"] == 50
        assert cfg.system_options["sensor_heights"] == (0.005, 0.045)
        assert cfg.mesh_bins == 8        # non-gaussian default

    def test_viscous_file_source_relative_path(self, tmp_path):
        data = tmp_path / "sq.csv"
        data.write_text("time_s,radius_mm,radius_std_mm\n0.1,10,0.2\n")
        text = """\
[run]
outdir = "out"
seed = 1

[system]
kind = "viscous"

[data]
source = "file"
path = "sq.csv"

[samplers.mh]
n_samples = 100
"""
        cfg = load_config(cfg_file(tmp_path, text))
        assert cfg.data["path"] == data
        assert cfg.data["relative"] == {"path": "sq.csv"}

    def test_viscous_file_source_absolute_path(self, tmp_path):
        data = tmp_path / "elsewhere" / "sq.csv"
        data.parent.mkdir()
        data.write_text("time_s,radius_mm,radius_std_mm\n0.1,10,0.2\n")
        text = f"""\
[run]
outdir = "out"
seed = 1

[system]
kind = "viscous"

[data]
source = "file"
path = "{data}"

[samplers.mh]
n_samples = 100
"""
        cfg = load_config(cfg_file(tmp_path, text))
        assert cfg.data["path"] == data
        assert cfg.data["relative"] == {"path": None}


class TestRunSection:
    def test_missing_run_section(self, tmp_path):
        load_err(tmp_path, "[system]\nkind = 'gaussian-test'\n",
                 "run: required section missing")

    def test_missing_outdir(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace('outdir = "out"\n', ""),
                 r"run\.outdir: required key missing")

    def test_negative_seed(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace("seed = 7", "seed = -1"),
                 r"run\.seed: must be >= 0")

    def test_boolean_seed_rejected(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace("seed = 7", "seed = true"),
                 r"run\.seed: expected an integer")

    def test_zero_chains(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace("seed = 7", "seed = 7\nchains = 0"),
                 r"run\.chains: must be a positive integer")

    def test_prefix_schedule_must_increase(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL.replace("seed = 7",
                                 "seed = 7\nprefix_schedule = [100, 100]"),
                 r"run\.prefix_schedule: must be strictly increasing")
        load_err(tmp_path,
                 MINIMAL.replace("seed = 7",
                                 "seed = 7\nprefix_schedule = [100, 50]"),
                 r"run\.prefix_schedule: must be strictly increasing")

    def test_prefix_schedule_type(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL.replace("seed = 7",
                                 "seed = 7\nprefix_schedule = [1]"),
                 r"run\.prefix_schedule: expected a list of integers >= 2")

    def test_unknown_run_key(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace("seed = 7", "seed = 7\nfoo = 1"),
                 r"run: unknown key\(s\) \['foo'\]")

    def test_run_samplers_without_section(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL.replace("seed = 7", 'seed = 7\nsamplers = ["nuts"]'),
                 r"run\.samplers: no \[samplers\.nuts\] section configured")


class TestSystemSection:
    def test_unknown_kind(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace("gaussian-test", "plasma"),
                 r"system\.kind: expected one of")

    def test_non_positive_dt(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL.replace('kind = "gaussian-test"',
                                 'kind = "gaussian-test"\ndt = 0.0'),
                 r"system\.dt: must be positive")

    def test_thermal_only_keys_rejected_elsewhere(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL.replace('kind = "gaussian-test"',
                                 'kind = "gaussian-test"\nn_elements = 25'),
                 r"system: unknown key\(s\) \['n_elements'\]")

    def test_bad_sensor_heights(self, tmp_path):
        text = MINIMAL.replace('kind = "gaussian-test"',
                               'kind = "thermal"\nsensor_heights = [0.0]')
        load_err(tmp_path, text,
                 r"system\.sensor_heights: expected a list of positive")


class TestDataSection:
    def test_unknown_source(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[data]\nsource = 'oracle'\n",
                 r"data\.source: expected 'synthetic' or 'file'")

    def test_gaussian_has_no_file_data(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[data]\nsource = 'file'\n",
                 r"data\.source: gaussian-test has no file data")

    def test_non_positive_noise(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[data]\nnoise_std = -0.5\n",
                 r"data\.noise_std: must be positive")

    def test_missing_required_path(self, tmp_path):
        text = MINIMAL.replace('kind = "gaussian-test"', 'kind = "viscous"')
        load_err(tmp_path, text + "\n[data]\nsource = 'file'\n",
                 r"data\.path: required key missing")

    def test_file_not_found(self, tmp_path):
        text = (MINIMAL.replace('kind = "gaussian-test"', 'kind = "viscous"')
                + "\n[data]\nsource = 'file'\npath = 'missing.csv'\n")
        load_err(tmp_path, text, r"data\.path: file not found")

    def test_parent_escape_rejected(self, tmp_path):
        (tmp_path / "sq.csv").write_text(
            "time_s,radius_mm,radius_std_mm\n0.1,10,0.2\n")
        sub = tmp_path / "sub"
        sub.mkdir()
        text = (MINIMAL.replace('kind = "gaussian-test"', 'kind = "viscous"')
                + "\n[data]\nsource = 'file'\npath = '../sq.csv'\n")
        with pytest.raises(ConfigError, match=r"data\.path:.*no '\.\.'"):
            load_config(cfg_file(sub, text))

    def test_thermal_file_source_requires_both_files(self, tmp_path):
        text = (MINIMAL.replace('kind = "gaussian-test"', 'kind = "thermal"')
                + "\n[data]\nsource = 'file'\nambient = 'a.csv'\n")
        load_err(tmp_path, text, r"data\.observations: required key missing")


class TestMeshSection:
    def test_bad_scalar_bins(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[mesh]\nbins = 0\n",
                 r"mesh\.bins: expected a positive integer")

    def test_bad_list_bins(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[mesh]\nbins = [4, 0]\n",
                 r"mesh\.bins: expected positive integers")

    def test_non_positive_z(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[mesh]\nz = -1.0\n",
                 r"mesh\.z: must be positive")


class TestSamplerSections:
    def test_missing_samplers_section(self, tmp_path):
        text = "[run]\noutdir = 'o'\nseed = 1\n[system]\nkind = 'gaussian-test'\n"
        load_err(tmp_path, text, "samplers: required section missing")

    def test_missing_n_samples(self, tmp_path):
        load_err(tmp_path, MINIMAL.replace("n_samples = 500", "initial_scale = 0.2"),
                 r"samplers\.mh\.n_samples: required key missing")

    def test_unknown_sampler_name(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[samplers.slice]\nn_samples = 10\n",
                 r"samplers\.slice: unknown sampler")

    def test_unknown_option_key(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[samplers.nuts]\nn_samples = 10\nfoo = 1\n",
                 r"samplers\.nuts: unknown key\(s\) \['foo'\]")

    def test_aism_stretch_bound(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL + "\n[samplers.aism]\nn_samples = 10\nstretch = 1.0\n",
                 r"samplers\.aism\.stretch: must be > 1")

    def test_nuts_target_accept_bounds(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL + "\n[samplers.nuts]\nn_samples = 10\ntarget_accept = 1.0\n",
                 r"samplers\.nuts\.target_accept: must lie in \(0, 1\)")

    def test_nuts_negative_adapt_steps(self, tmp_path):
        load_err(tmp_path,
                 MINIMAL + "\n[samplers.nuts]\nn_samples = 10\nadapt_steps = -1\n",
                 r"samplers\.nuts\.adapt_steps: must be >= 0")


class TestPriorRows:
    def test_rows_parsed_and_duplicates_rejected(self, tmp_path):
        text = MINIMAL + """
[[priors]]
name = "a"
dist = "normal"
mean = 1.0
std = 2.0

[[priors]]
name = "b"
dist = "beta"
a = 3.0
b = 8.0
"""
        cfg = load_config(cfg_file(tmp_path, text))
        assert [r["name"] for r in cfg.prior_rows] == ["a", "b"]
        load_err(tmp_path, text.replace('name = "b"', 'name = "a"'),
                 "priors: duplicate parameter names")

    def test_unknown_distribution(self, tmp_path):
        text = MINIMAL + "\n[[priors]]\nname = 'a'\ndist = 'cauchy'\n"
        load_err(tmp_path, text, r"priors\[0\]\.dist: unknown distribution")

    def test_uniform_bounds_ordered(self, tmp_path):
        text = (MINIMAL + "\n[[priors]]\nname = 'a'\ndist = 'uniform'\n"
                "lower = 2.0\nupper = 1.0\n")
        load_err(tmp_path, text, r"priors\[0\]: upper must exceed lower")

    def test_unknown_transform(self, tmp_path):
        text = (MINIMAL + "\n[[priors]]\nname = 'a'\ndist = 'normal'\n"
                "mean = 0.0\nstd = 1.0\ntransform = 'tanh'\n")
        load_err(tmp_path, text, r"priors\[0\]\.transform: unknown transform")


class TestBuildPriorSpec:
    def test_distributions_and_transforms(self):
        rows = (
            {"name": "n", "dist": "normal", "mean": 1.0, "std": 2.0,
             "transform": "identity", "unit": "K"},
            {"name": "t", "dist": "truncnormal", "mean": 1.0, "std": 0.5,
             "lower": 0.1, "upper": 10.0, "transform": "logit"},
            {"name": "l", "dist": "lognormal", "mean": 0.87, "std": 0.012,
             "transform": None},
            {"name": "b", "dist": "beta", "a": 3.0, "b": 8.0,
             "transform": "logit"},
            {"name": "u", "dist": "uniform", "lower": -1.0, "upper": 2.0,
             "transform": "log"},
        )
        spec = build_prior_spec(rows)
        assert spec.names == ("n", "t", "l", "b", "u")
        dists = [p.dist for p in spec.parameters]
        assert isinstance(dists[0], Normal)
        assert isinstance(dists[1], TruncatedNormal)
        assert isinstance(dists[2], LogNormal)
        assert isinstance(dists[3], Beta)
        assert isinstance(dists[4], Uniform)
        # lognormal given as (mean, std) moments: mean of the dist matches
        assert dists[2].nominal() == pytest.approx(0.87, rel=1e-12)
        tr = [p.transform for p in spec.parameters]
        assert isinstance(tr[0], Identity)
        assert isinstance(tr[1], Logit)
        assert tr[1].lower == 0.1 and tr[1].upper == 10.0
        assert isinstance(tr[3], Logit)
        assert tr[3].lower == 0.0 and tr[3].upper == 1.0
        assert isinstance(tr[4], Log) and tr[4].lower == -1.0
        assert spec.parameters[0].unit == "K"

    def test_unspecified_transform_uses_family_default(self):
        rows = ({"name": "l", "dist": "lognormal", "mean": 1.0, "std": 0.1,
                 "transform": None},)
        spec = build_prior_spec(rows)
        tr = spec.parameters[0].transform
        # positive-support family defaults to a log map, and it round-trips
        phi = tr.inverse(0.8)
        assert tr.forward(phi) == pytest.approx(0.8, rel=1e-12)
        assert tr.forward(-50.0) > 0.0


class TestFileLevelErrors:
    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config file"):
            load_config(tmp_path / "absent.toml")

    def test_invalid_toml(self, tmp_path):
        load_err(tmp_path, "run = [unclosed\n", "not valid TOML")

    def test_unknown_top_level_section(self, tmp_path):
        load_err(tmp_path, MINIMAL + "\n[extras]\nx = 1\n",
                 r"unknown key\(s\) \['extras'\]")
