"""Risk of the mean sojourn time of an M/M/1 queue under input uncertainty.

The arrival and service rates are unknown.  Given n observed inter-arrival
and service times, each rate has a Gamma posterior, and every outer
scenario is a posterior draw conditioned on a stable queue (lambda < mu).
The inner simulation runs the queue from empty and averages the sojourn
times of the first M customers.

Run:  python demos/02_mm1_queue.py
"""
from nestrisk import (RngStream, cvar_nested, derive_seed, estimate_variance_terms,
                      generate_data, mm1_model, posterior_from_data, simulate_nested, var_nested,
                      weak_ci)

MU0 = 500.0
SEED = 2024

# In expectation more data means a tighter posterior and a smaller gap
# between the mean sojourn time and its tail risk.  One synthetic data set
# per row can buck that trend when n is small.
print(f"{'lambda0':>7} {'n':>6} {'mean':>10} {'VaR90':>10} {'CVaR90':>10} {'VaR CI +/-':>11}")
for i, lambda0 in enumerate((50, 250)):
    for j, n in enumerate((10, 100, 10_000)):
        data = generate_data(lambda0, MU0, n, RngStream(derive_seed(SEED, 1, i, j)))
        model = mm1_model(data)
        s = simulate_nested(model, 5000, 200, derive_seed(SEED, 3, i, j), threads=4)
        terms = estimate_variance_terms(s, 0.9)
        ci = weak_ci(s, 0.9, 0.025, 0.025, terms)
        print(f"{lambda0:>7} {n:>6} {s.inner_mean.mean():>10.3e} "
              f"{var_nested(s, 0.9).value:>10.3e} {cvar_nested(s, 0.9).value:>10.3e} "
              f"{ci.half_width:>11.2e}")

# The posterior itself: Gamma(shape n, rate sum of observations).
lam, mu = posterior_from_data(generate_data(50, MU0, 100, RngStream(7)))
print(f"\nposterior with n = 100: lambda ~ Gamma({lam.shape:.0f}, {lam.rate:.3f}) "
      f"mean {lam.mean:.1f}; mu ~ Gamma({mu.shape:.0f}, {mu.rate:.4f}) mean {mu.mean:.1f}")

# Sojourn times along one run are autocorrelated, so the inner variance
# used by the intervals comes from batch means rather than the raw sample
# variance.  Compare the two on the same draws.
data = generate_data(50, MU0, 100, RngStream(derive_seed(SEED, 1)))
for batches in (10, None):
    s = simulate_nested(mm1_model(data, batches=batches), 2000, 200, 5)
    label = f"batch means ({batches})" if batches else "sample variance"
    print(f"mean inner variance, {label:17s}: {s.inner_var.mean():.3e}")
