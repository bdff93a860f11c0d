"""Campaign orchestration: artifacts, reproducibility, and failure honesty."""
import csv
import json
from pathlib import Path

import numpy as np
import pytest

from bayescal.errors import ConfigError, ValidationError
from bayescal.harness.campaign import (OUTPUT_ROOT_ENV, assemble_report,
                                       build_system, diagnose, kl_report,
                                       resolve_outdir, run_campaign)
from bayescal.harness.config import load_config
from bayescal.samplers import load_chain

from conftest import GAUSS_TOML


def read_rows(path):
    with open(path, encoding="utf-8") as f:
        return list(csv.DictReader(f))


def run_toml(tmp_path, text, name="config.toml"):
    cfg_path = tmp_path / name
    cfg_path.write_text(text, encoding="utf-8")
    cfg = load_config(cfg_path)
    return cfg, run_campaign(cfg, log=lambda s: None)


class TestArtifactLayout:
    def test_required_files_present(self, gauss_campaign):
        out = Path(gauss_campaign)
        for rel in ("config.toml", "data.csv", "priors.csv", "failures.json",
                    "chains/mh/chain_00.csv", "chains/mh/chain_00.meta.json",
                    "chains/mh/chain_01.csv",
                    "chains/aism/chain_00.csv",
                    "chains/aism/chain_00_ensemble.csv",
                    "reports/burnin.csv", "reports/ess.csv",
                    "reports/gelman.csv", "reports/evals.csv",
                    "reports/posterior_summary.csv",
                    "reports/predictive.csv",
                    "reports/kl.csv", "reports/kl_mesh.json"):
            assert (out / rel).is_file(), rel

    def test_config_copied_byte_identical(self, gauss_campaign):
        out = Path(gauss_campaign)
        assert (out / "config.toml").read_text() == GAUSS_TOML

    def test_no_truth_file_for_analytic_system(self, gauss_campaign):
        assert not (Path(gauss_campaign) / "truth.json").exists()
        assert not (Path(gauss_campaign) / "ambient.csv").exists()

    def test_failures_empty_and_chains_clean(self, gauss_campaign):
        out = Path(gauss_campaign)
        assert json.loads((out / "failures.json").read_text()) == []
        expected_n = {"mh": 1200, "aism": 4800}
        for f in sorted(out.glob("chains/*/chain_0?.csv")):
            ch = load_chain(f)
            assert ch.burn_in is not None
            assert ch.n == expected_n[f.parent.name] and ch.dim == 2

    def test_priors_table_lists_parameters(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "priors.csv")
        assert [r["name"] for r in rows] == ["x1", "x2"]
        assert all(r["dist"] == "normal" for r in rows)
        assert all(float(r["std"]) == 5.0 for r in rows)

    def test_data_csv_lists_observations(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "data.csv")
        assert [r["label"] for r in rows] == ["y1", "y2"]
        assert all(float(r["value"]) == 0.0 for r in rows)


class TestEnsembleSidecar:
    def test_walker_bookkeeping(self, gauss_campaign):
        out = Path(gauss_campaign)
        flat = load_chain(out / "chains/aism/chain_00.csv")
        ens = load_chain(out / "chains/aism/chain_00_ensemble.csv")
        assert flat.walkers == 8 and ens.walkers == 8
        assert flat.n == 4800
        assert ens.n == 600                     # one row per round
        assert flat.cum_evals[-1] == ens.cum_evals[-1] == 4800
        # the ensemble row is the walker mean of the matching round
        rounds = flat.states.reshape(600, 8, 2)
        assert np.allclose(ens.states, rounds.mean(axis=1),
                           rtol=1e-12, atol=1e-12)
        # burn-in converts rounds to samples on the flattened chain
        assert flat.burn_in == ens.burn_in * 8


class TestEvalLedger:
    def test_one_eval_per_recorded_sample(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "evals.csv")
        assert len(rows) == 4
        expected_n = {"mh": 1200, "aism": 4800}
        for r in rows:
            assert int(r["total_evals"]) == int(r["n_rows"])
            assert int(r["n_rows"]) == expected_n[r["sampler"]]

    def test_mh_adaptation_ledger_is_separate(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "evals.csv")
        mh = [r for r in rows if r["sampler"] == "mh"]
        aism = [r for r in rows if r["sampler"] == "aism"]
        for r in mh:
            assert r["adaptation_included"] == "0"
            assert int(r["adaptation_evals"]) >= 300
        for r in aism:
            assert r["adaptation_included"] == "0"
            assert int(r["adaptation_evals"]) == 0

    def test_no_model_failures_on_clean_run(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "evals.csv")
        assert all(int(r["model_failures"]) == 0 for r in rows)


class TestDiagnosticsReports:
    def test_burnin_rows(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "burnin.csv")
        assert len(rows) == 4
        for r in rows:
            assert r["converged"] == "1"
            assert int(r["burn_in"]) % 10 == 0
            # the scan certifies the parameter traces; the log-posterior
            # tail p-value is reported as-is, so only sanity-check it
            assert 1e-3 < float(r["geweke_p_after"]) <= 1.0
        aism = [r for r in rows if r["sampler"] == "aism"]
        assert all(int(r["walkers"]) == 8 for r in aism)
        # flattened burn-in = rounds * walkers
        assert all(int(r["burn_in_samples"]) == 8 * int(r["burn_in"])
                   for r in aism)

    def test_ess_rows_scale_with_prefix(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "ess.csv")
        for kind in ("mh", "aism"):
            sub = [r for r in rows if r["sampler"] == kind and r["param"] == "x1"]
            assert len(sub) >= 1
            prefixes = [int(r["n_prefix"]) for r in sub]
            assert prefixes == sorted(prefixes)
            evals = [int(r["evals"]) for r in sub]
            assert evals == sorted(evals)
            for r in sub:
                assert 0.0 < float(r["ess"]) <= int(r["n_used"])
                assert 0.0 < float(r["ess_per_sample"]) <= 1.0
                assert float(r["ess_per_eval"]) > 0.0

    def test_gelman_rows_near_one(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "gelman.csv")
        finals = {}
        for r in rows:
            finals[(r["sampler"], r["param"])] = float(r["rhat"])
        assert finals and all(v < 1.2 for v in finals.values())

    def test_posterior_summary_centers_near_truth(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports"
                         / "posterior_summary.csv")
        # zero-data identity system: posterior mean is 0 for every parameter
        for r in rows:
            assert abs(float(r["mean"])) < 0.4
            assert float(r["q05"]) < float(r["q50"]) < float(r["q95"])

    def test_predictive_rows_per_sampler(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "predictive.csv")
        assert {r["sampler"] for r in rows} == {"mh", "aism"}
        for r in rows:
            assert abs(float(r["predicted"]) - float(r["observed"])) < 0.5

    def test_diagnose_returns_overview(self, gauss_campaign):
        overview = diagnose(gauss_campaign)
        assert set(overview) == {"mh", "aism"}
        for v in overview.values():
            assert v["ess_min"] > 0
            assert v["rhat_max"] < 1.2


class TestKLReport:
    def test_mesh_metadata(self, gauss_campaign):
        meta = json.loads((Path(gauss_campaign) / "reports"
                           / "kl_mesh.json").read_text())
        assert meta["bins"] == [16, 16]
        assert meta["cells"] == 256
        assert meta["z"] == 4.0
        assert meta["params"] == ["x1", "x2"]
        assert meta["reference_evals"] == 256
        assert len(meta["edges"]["x1"]) == 17

    def test_kl_rows_finite_and_covered(self, gauss_campaign):
        rows = read_rows(Path(gauss_campaign) / "reports" / "kl.csv")
        assert {r["sampler"] for r in rows} == {"mh", "aism"}
        for r in rows:
            assert float(r["kl"]) >= 0.0
            assert float(r["kl"]) < 5.0
            assert 0.0 < float(r["coverage"]) <= 1.0
            assert int(r["n_inside"]) <= int(r["n_pooled"])

    def test_mesh_cell_budget_enforced(self, gauss_campaign):
        with pytest.raises(ValidationError, match="above the configured limit"):
            kl_report(gauss_campaign, bins=64, max_cells=1000)


class TestAssembledReport:
    def test_report_json_summary(self, gauss_campaign):
        rep = assemble_report(gauss_campaign)
        assert rep["schema"] == 1
        assert rep["system"] == "gaussian-test"
        assert rep["chains_expected"] == 4
        assert rep["chains_present"] == 4
        assert rep["chains_converged"] == 4
        assert rep["all_completed"] is True
        assert rep["failures"] == []
        expected = {"mh": 1200, "aism": 4800}
        for kind in ("mh", "aism"):
            s = rep["samplers"][kind]
            assert s["chains"] == 2 and s["converged_chains"] == 2
            assert s["n_samples"] == expected[kind]
            assert s["total_evals"] == 2 * expected[kind]
            assert s["ess_min"] > 0 and s["rhat_max"] < 1.2
            assert s["kl_final"] >= 0.0
        assert "report.json" not in rep["artifacts"]
        assert "chains/mh/chain_00.csv" in rep["artifacts"]
        assert (Path(gauss_campaign) / "report.json").is_file()


class TestReproducibility:
    def test_rerun_is_byte_identical(self, gauss_campaign, tmp_path):
        cfg_path = tmp_path / "gauss.toml"
        cfg_path.write_text(GAUSS_TOML)
        cfg = load_config(cfg_path)
        out2 = Path(run_campaign(cfg, log=lambda s: None)["outdir"])
        diagnose(out2)
        kl_report(out2)
        out1 = Path(gauss_campaign)
        for rel in ("chains/mh/chain_00.csv", "chains/mh/chain_00.meta.json",
                    "chains/mh/chain_01.csv", "chains/aism/chain_00.csv",
                    "chains/aism/chain_00_ensemble.csv",
                    "data.csv", "priors.csv",
                    "reports/ess.csv", "reports/gelman.csv",
                    "reports/kl.csv", "reports/kl_mesh.json"):
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    def test_longer_run_extends_shorter_exactly(self, gauss_campaign, tmp_path):
        """Same seed, smaller n: the chain is a prefix of the longer chain."""
        text = GAUSS_TOML.replace("n_samples = 1200", "n_samples = 400")
        text = text.replace("chains = 2", "chains = 1")
        text = text.replace("seed = 424242", 'seed = 424242\nsamplers = ["mh"]')
        _, res = run_toml(tmp_path, text, name="short.toml")
        short = load_chain(Path(res["outdir"]) / "chains/mh/chain_00.csv")
        full = load_chain(Path(gauss_campaign) / "chains/mh/chain_00.csv")
        assert np.array_equal(short.states, full.states[:400])
        assert np.array_equal(short.log_post, full.log_post[:400])
        assert np.array_equal(short.cum_evals, full.cum_evals[:400])


class TestOutdirResolution:
    def make_cfg(self, tmp_path, outdir_line):
        text = GAUSS_TOML.replace('outdir = "out"', f'outdir = "{outdir_line}"')
        p = tmp_path / "c.toml"
        p.write_text(text)
        return load_config(p)

    def test_relative_lands_next_to_config(self, tmp_path, monkeypatch):
        monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)
        cfg = self.make_cfg(tmp_path, "runs/a")
        assert resolve_outdir(cfg) == tmp_path / "runs" / "a"

    def test_environment_root_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "envroot"))
        cfg = self.make_cfg(tmp_path, "runs/a")
        assert resolve_outdir(cfg) == tmp_path / "envroot" / "runs" / "a"

    def test_explicit_root_beats_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "envroot"))
        cfg = self.make_cfg(tmp_path, "runs/a")
        got = resolve_outdir(cfg, out_root=tmp_path / "explicit")
        assert got == tmp_path / "explicit" / "runs" / "a"

    def test_absolute_outdir_ignores_roots(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "envroot"))
        cfg = self.make_cfg(tmp_path, str(tmp_path / "abs" / "dir"))
        assert resolve_outdir(cfg) == tmp_path / "abs" / "dir"


VISC_FILE_TOML = """\
[run]
outdir = "out"
seed = 11
chains = 1

[system]
kind = "viscous"
dt = 5.67e-4

[data]
source = "file"
path = "squeeze.csv"

[samplers.mh]
n_samples = 150
adapt_samples = 600
"""

SQUEEZE_CSV = "time_s,radius_mm,radius_std_mm\n" + "".join(
    f"{0.05 * (1.5 ** i - 1) / 0.5:.6g},{8 + 4 * (1 - 1.3 ** -i):.6g},0.15\n"
    for i in range(1, 11))


class TestDataFileCopy:
    def test_relative_data_copied_into_outdir(self, tmp_path):
        (tmp_path / "squeeze.csv").write_text(SQUEEZE_CSV)
        cfg, res = run_toml(tmp_path, VISC_FILE_TOML)
        out = Path(res["outdir"])
        assert (out / "squeeze.csv").read_text() == SQUEEZE_CSV
        # the copied campaign directory reloads on its own
        diagnose(out)
        assert (out / "reports" / "burnin.csv").is_file()

    def test_absolute_data_not_copied(self, tmp_path):
        data = tmp_path / "elsewhere" / "squeeze.csv"
        data.parent.mkdir()
        data.write_text(SQUEEZE_CSV)
        text = VISC_FILE_TOML.replace('path = "squeeze.csv"',
                                      f'path = "{data}"')
        cfg, res = run_toml(tmp_path, text)
        out = Path(res["outdir"])
        assert not (out / "squeeze.csv").exists()
        diagnose(out)  # absolute path still resolves from the copy


class TestFailureHonesty:
    def test_short_chain_burn_in_failure_recorded(self, tmp_path):
        """A chain too short for the stationarity scan is kept but flagged,
        and the report refuses to call the campaign complete."""
        (tmp_path / "squeeze.csv").write_text(SQUEEZE_CSV)
        cfg, res = run_toml(tmp_path, VISC_FILE_TOML)
        assert res["completed"] == 0
        assert len(res["failures"]) == 1
        f = res["failures"][0]
        assert f["sampler"] == "mh" and f["stage"] == "burn-in"
        out = Path(res["outdir"])
        assert json.loads((out / "failures.json").read_text()) == res["failures"]
        ch = load_chain(out / "chains/mh/chain_00.csv")
        assert ch.burn_in is None          # honest: unknown, not zero
        assert ch.n == 150                 # the samples are still persisted
        diagnose(out)
        rep = assemble_report(out)
        assert rep["all_completed"] is False
        assert rep["chains_present"] == 1
        assert rep["chains_converged"] == 0

    def test_truth_recorded_for_synthetic_sources(self, tmp_path):
        text = """\
[run]
outdir = "out"
seed = 3
chains = 1

[system]
kind = "viscous"
dt = 5.67e-4

[samplers.mh]
n_samples = 250
adapt_samples = 600
"""
        cfg, res = run_toml(tmp_path, text)
        truth = json.loads((Path(res["outdir"]) / "truth.json").read_text())
        assert set(truth["theta"]) == {"F", "V", "R0", "eta", "gamma", "alpha"}
        assert truth["theta"]["alpha"] == pytest.approx(3 / 11, rel=1e-12)
        assert truth["theta"]["V"] == pytest.approx(0.20e-6, rel=1e-9)


class TestGuards:
    def test_not_a_campaign_dir(self, tmp_path):
        with pytest.raises(ConfigError, match="missing config.toml"):
            diagnose(tmp_path)

    def test_campaign_without_chains(self, tmp_path):
        (tmp_path / "config.toml").write_text(GAUSS_TOML)
        with pytest.raises(ConfigError, match="run the campaign first"):
            diagnose(tmp_path)

    def test_prior_rows_rejected_for_analytic_system(self, tmp_path):
        text = GAUSS_TOML + """
[[priors]]
name = "x1"
dist = "normal"
mean = 0.0
std = 2.0
"""
        p = tmp_path / "c.toml"
        p.write_text(text)
        with pytest.raises(ConfigError, match="prior_std instead"):
            build_system(load_config(p))

    def test_prior_override_must_redeclare_full_table(self, tmp_path):
        text = VISC_FILE_TOML + """
[[priors]]
name = "F"
dist = "normal"
mean = 2.8
std = 0.2
"""
        (tmp_path / "squeeze.csv").write_text(SQUEEZE_CSV)
        p = tmp_path / "c.toml"
        p.write_text(text)
        with pytest.raises(ConfigError, match="full table"):
            build_system(load_config(p))

    def test_prior_override_applies_when_complete(self, tmp_path):
        rows = "\n".join(f"""
[[priors]]
name = "{n}"
dist = "lognormal"
mean = {mean}
std = {std}
""" for n, mean, std in [("F", 2.8, 0.2), ("V", 0.2e-6, 4e-8),
                         ("R0", 7.6e-3, 3e-4), ("eta", 0.87, 0.02),
                         ("gamma", 4.5e-2, 5e-3), ("alpha", 0.27, 0.05)])
        (tmp_path / "squeeze.csv").write_text(SQUEEZE_CSV)
        p = tmp_path / "c.toml"
        p.write_text(VISC_FILE_TOML + rows)
        bundle = build_system(load_config(p))
        par = bundle.prior.parameters[0]
        assert type(par.dist).__name__ == "LogNormal"
        assert par.dist.nominal() == pytest.approx(2.8, rel=1e-12)
