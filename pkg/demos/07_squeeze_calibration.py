"""Calibrating the squeeze-flow constitutive parameters from noisy radii.

The inverse-problem workflow at library level, no harness: synthesize
noisy contact-radius observations at known parameters, build the
posterior over the six constitutive parameters (truncated-normal and
shifted priors handled through an unconstrained reparametrization),
sample it with gradient-guided NUTS, and check that the posterior
concentrates around the generating values.

Run:  python3 demos/07_squeeze_calibration.py          (~1 min)
"""
import numpy as np
from numpy.random import SeedSequence, default_rng

from bayescal.diagnostics import effective_sample_size, geweke_burn_in
from bayescal.harness.datasets import synth_squeeze
from bayescal.samplers import NUTSConfig, nuts_run
from bayescal.systems import make_squeeze_target, viscous_prior

DT = 5.67e-4        # integrator step [s]: ~1e-4 of the observation span

rng = default_rng(SeedSequence(70))
dataset, theta_true = synth_squeeze(rng, noise_std=1e-4, n_obs=10, dt=DT)
prior = viscous_prior()
print("synthetic dataset: 10 radii, 0.1 mm noise, generated at")
for name, v in zip(prior.names, theta_true):
    print(f"  {name:<6} = {v:.6g}")

target = make_squeeze_target(dataset.obs_times, dataset.observation_set(),
                             prior=prior, dt=DT)
chain = nuts_run(target, NUTSConfig(3000, adapt_steps=600), rng)

burn = max(chain.burn_in, geweke_burn_in(chain.log_post))
kept = chain.states[burn:]
print(f"\nNUTS: 3000 steps, {int(chain.cum_evals[-1])} model evaluations, "
      f"{burn} discarded as warm-up")

print(f"\n{'param':<6} {'truth':>12} {'post mean':>12} {'post std':>12} "
      f"{'z':>6} {'ESS':>6}")
for j, name in enumerate(prior.names):
    x = kept[:, j]
    ess = effective_sample_size(x)
    z = (x.mean() - theta_true[j]) / x.std()
    print(f"{name:<6} {theta_true[j]:>12.5g} {x.mean():>12.5g} "
          f"{x.std():>12.3g} {z:>6.2f} {ess:>6.0f}")

print("\nevery generating value sits within a few posterior standard "
      "deviations;\nparameters the data cannot pin down (load F, volume V) "
      "keep posterior\nwidths comparable to their priors — the radii only "
      "constrain combinations.")
