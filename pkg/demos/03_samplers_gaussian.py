"""Three samplers on a correlated Gaussian with a known posterior.

A 2-D Gaussian likelihood with strongly correlated components
(rho = 0.9) under a wide Gaussian prior has a closed-form posterior, so
sampler output can be judged against exact moments.  This script runs
the three shipped samplers — random-walk Metropolis-Hastings with an
adapted proposal, the affine-invariant stretch-move ensemble sampler,
and the dynamic No-U-Turn sampler — and compares recovered moments and
effective sample sizes.

Run:  python3 demos/03_samplers_gaussian.py          (~30 s)
"""
import numpy as np
from numpy.random import SeedSequence, default_rng

from bayescal.diagnostics import effective_sample_size
from bayescal.samplers import (AISMConfig, MHConfig, NUTSConfig, aism_run,
                               flatten_walkers, mh_adapt, mh_run, nuts_run)
from bayescal.systems import gaussian_posterior_moments, make_gaussian_target

N = 20_000
mean, cov = gaussian_posterior_moments(2, prior_std=5.0)
print("exact posterior:  mean", np.round(mean, 6),
      " cov", np.round(cov, 4).tolist())


def report(name, chain, n_burn):
    kept = chain.states[n_burn:]
    ess = min(effective_sample_size(kept[:, j]) for j in range(2))
    evals = int(chain.cum_evals[-1])
    m = kept.mean(axis=0)
    c = np.cov(kept, rowvar=False)
    print(f"\n{name}")
    print(f"  mean        {np.round(m, 4)}")
    print(f"  cov         {np.round(c, 4).tolist()}")
    print(f"  min ESS     {ess:8.0f}  ({ess / kept.shape[0]:.1%} per kept "
          f"sample)")
    print(f"  model evals {evals}  ({ess / evals:.2%} ESS per evaluation)")


# Metropolis-Hastings: adapt a proposal covariance first, then run.
rng = default_rng(SeedSequence(11))
proposal = mh_adapt(make_gaussian_target(2, 5.0), 2000, rng)
mh_chain = mh_run(make_gaussian_target(2, 5.0), MHConfig(N, proposal), rng)
report("Metropolis-Hastings (adapted random walk)", mh_chain, 0)

# Affine-invariant ensemble: 8 walkers, stretch moves, flattened output.
rng = default_rng(SeedSequence(12))
walker_chains = aism_run(make_gaussian_target(2, 5.0), AISMConfig(N, 8), rng)
report("Affine-invariant ensemble (8 walkers, flattened)",
       flatten_walkers(walker_chains), 0)

# NUTS: gradient-guided, step size adapted during a warm-up phase.
rng = default_rng(SeedSequence(13))
nuts_chain = nuts_run(make_gaussian_target(2, 5.0),
                      NUTSConfig(N, adapt_steps=1000), rng)
report("No-U-Turn sampler (1000 warm-up steps discarded)", nuts_chain,
       nuts_chain.burn_in)
print(f"\n  NUTS step size after warm-up: "
      f"{nuts_chain.meta['step_size']:.4f}; "
      f"divergences: {nuts_chain.meta['divergences']}")

print("\nTakeaway: per kept sample NUTS is by far the most efficient; per "
      "model\nevaluation the gap narrows because each NUTS step costs many "
      "gradient\nevaluations while the other two cost exactly one likelihood "
      "call per step.")
