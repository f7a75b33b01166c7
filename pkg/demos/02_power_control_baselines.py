"""
Classical power control on a single channel draw
================================================

Before any learning, it is worth seeing what the classical allocators do.
On the true channel we can afford an exhaustive grid search (the oracle);
WMMSE gets close to it with a handful of iterations; full power and TDMA
are the two blind extremes that need no channel knowledge at all.

Run with:  python3 demos/02_power_control_baselines.py
"""

import numpy as np

from teammoe import env, rate
from teammoe.policies import (naive_wmmse_team_batch, perfect_csi_oracle,
                              perfect_csi_oracle_batch, tdma_powers,
                              wmmse_powers, wmmse_powers_batch,
                              wmmse_powers_trace)

P_MAX = 1.0
rng = np.random.default_rng(7)
g = env.sample_channel(rng, k=2)
print("channel:")
print(np.array2string(g, precision=3))

# The contenders, each with the rate it achieves on this draw.
candidates = {
    "grid oracle": perfect_csi_oracle(g, P_MAX, grid_points=101),
    "wmmse": wmmse_powers(g, P_MAX),
    "full power": np.full(2, P_MAX),
    "tdma (tx 0)": tdma_powers(2, 0, P_MAX),
}
print(f"\n{'policy':<12} {'powers':<16} rate")
for name, p in candidates.items():
    print(f"{name:<12} {np.array2string(p, precision=3):<16} "
          f"{rate.sum_rate(g, p):.4f}")

# WMMSE minimizes a surrogate (the weighted MSE) whose value never goes up
# from one iteration to the next. Watch it settle.
p, trace = wmmse_powers_trace(g, P_MAX)
print(f"\nwmmse surrogate per iteration ({len(trace)} iterations):")
print(np.array2string(np.asarray(trace[:8]), precision=5))
print(f"monotone non-increasing: {bool(np.all(np.diff(trace) <= 1e-12))}")

# Averaged over many draws the ordering is stable: the oracle on top, WMMSE
# just below it, and the blind policies clearly behind at this power budget.
n = 2000
batch = env.sample_batch_arrays(np.array([1.0, 1.0]), 0.0, n, rng)
gs = batch.true_channel
means = {
    "grid oracle": rate.sum_rate_batch(
        gs, perfect_csi_oracle_batch(gs, P_MAX, 101)).mean(),
    "wmmse": rate.sum_rate_batch(gs, wmmse_powers_batch(gs, P_MAX)).mean(),
    "full power": rate.sum_rate_batch(gs, np.full((n, 2), P_MAX)).mean(),
    "tdma (tx 0)": rate.sum_rate_batch(
        gs, np.broadcast_to(tdma_powers(2, 0, P_MAX), (n, 2))).mean(),
}
print(f"\nmean sum-rate over {n} draws at p_max = {P_MAX}:")
for name, val in means.items():
    print(f"  {name:<12} {val:.4f}")

# Finally the decentralized wrinkle: when each agent runs WMMSE on its own
# noisy copy of the channel and keeps only its own power component, the two
# components come from *different* beliefs. At low quality that mismatch
# costs real rate.
for gamma in (1.0, 0.5, 0.0):
    noisy = env.sample_batch_arrays(np.full(2, gamma), 0.0, n, rng)
    powers = naive_wmmse_team_batch(noisy.csi, P_MAX)
    val = rate.sum_rate_batch(noisy.true_channel, powers).mean()
    print(f"per-agent wmmse on own CSI, quality {gamma:>3}: {val:.4f}")
