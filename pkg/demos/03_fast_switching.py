# %% [markdown]
# # Switching faster gets close to constant inflow, but never reaches it
#
# Split a period of length 2 into `N` equal high/low pairs.  The shortfall
# `1 - J` falls roughly like `1 / N**2`.

# %%
import numpy as np

from bottleflow import BottleneckParams, fast_switching_family, periodic_gain, search_schedule

params = BottleneckParams(lam=1.0, sigma_bar=1.0, epsilon=0.5)
for N in (1, 10, 100, 1000):
    J = periodic_gain(fast_switching_family(params, 2.0, N), params)
    print(f"N = {N:5d}: 1 - J = {1 - J:.3e}")

# %% [markdown]
# ## Searching over uneven schedules
#
# A derivative-free search over the arc durations, for a fixed number of
# pairs, ends up back at equal durations.  More pairs still help.

# %%
for n_pairs in (1, 2, 4, 8):
    res = search_schedule(params, 2.0, n_pairs, budget=300, seed=0)
    durations = np.array([dt for _, dt in res.best_signal.segments])
    print(f"{n_pairs} pairs: best J = {res.best_gain:.6f}, "
          f"duration spread = {durations.max() - durations.min():.1e}")
