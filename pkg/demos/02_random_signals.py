# %% [markdown]
# # How much throughput do random switching schedules lose?
#
# Draw many balanced random schedules (equal time high and low) and look at
# the distribution of the gain.

# %%
import numpy as np

from bottleflow import BottleneckParams, periodic_gain, random_signal

params = BottleneckParams(lam=1.0, sigma_bar=1.0, epsilon=0.9)
gains = np.array([periodic_gain(random_signal(params, 20.0, 2, seed), params)
                  for seed in range(5000)])
print(f"mean J = {gains.mean():.4f}, min = {gains.min():.4f}, max = {gains.max():.4f}")

# %%
counts, edges = np.histogram(gains, bins=12)
for n, left in zip(counts, edges):
    print(f"{left:.4f} {'#' * int(60 * n / counts.max())}")

# %% [markdown]
# ## Larger mean inflow makes things worse
#
# Keeping the relative amplitude at 90% of the mean, the average gain drops
# as the mean inflow grows.  The same seeds are reused for every grid point.

# %%
for sigma_bar in (0.25, 0.5, 1.0, 1.5, 2.0, 2.5):
    p = BottleneckParams(1.0, sigma_bar, 0.9 * sigma_bar)
    J = [periodic_gain(random_signal(p, 20.0, 2, seed), p) for seed in range(1000)]
    print(f"sigma_bar = {sigma_bar:4}: mean J = {np.mean(J):.4f}")

# %% [markdown]
# The same data is available from the command line as CSV:
#
#     python -m bottleflow histogram --samples 10000 --out hist.csv
#     python -m bottleflow sweep --out sweep.csv
