# %% [markdown]
# # A chain of sites behind the bottleneck
#
# In the ribosome flow model each of `n` sites passes material to the next
# only if the next one has room.  When the downstream exit rates are much
# larger than the inflow, the downstream sites stay nearly empty and the
# chain behaves like the bottleneck followed by a linear cascade.

# %%
import numpy as np

from bottleflow import RfmParams, build_signal, compare_reduction, simulate_rfm

signal = build_signal([("plus", 1.0), ("minus", 1.0)])

# %%
for rate in (1.0, 10.0, 100.0):
    params = RfmParams((1.0, rate, rate, rate), epsilon=0.5)
    rep = compare_reduction(params, signal, step=0.002)
    print(f"exit rates {rate:5.0f}: full {rep.average_output_full:.6f}  "
          f"reduced {rep.average_output_reduced:.6f}  "
          f"relative gap {rep.relative_output_discrepancy:.2e}")

# %% [markdown]
# With fast downstream rates the second and third sites barely fill up.

# %%
sim = simulate_rfm(RfmParams((1.0, 100.0, 100.0, 100.0), 0.5), signal, np.zeros(3), step=0.002)
print("periods to entrain:", sim.periods)
print("max occupancy per site:", np.round(sim.states.max(axis=0), 4))
