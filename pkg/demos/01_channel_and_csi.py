"""
Interference channel draws and noisy channel knowledge
=======================================================

Two transmitter/receiver pairs share the same band. The matrix entry
G[j, i] is the power gain from transmitter j into receiver i, so the
diagonal carries the useful links and the off-diagonal the interference.
Each agent only sees a corrupted copy of G, and how corrupted depends on
its own quality level gamma: at gamma = 1 the copy equals G, at gamma = 0
it is an independent draw.

Run with:  python3 demos/01_channel_and_csi.py
"""

import numpy as np

from teammoe import env

rng = np.random.default_rng(0)

# One realization. Gains are unit-mean exponentials, so values near zero
# are common and values above 3 are rare but not exotic.
g = env.sample_channel(rng, k=2)
print("one channel draw (rows = transmitters, cols = receivers):")
print(np.array2string(g, precision=3))

# The unit-mean claim, checked on a big sample.
many = np.stack([env.sample_channel(rng, 2) for _ in range(20000)])
print(f"\nempirical mean gain: {many.mean():.3f}  (should be close to 1)")
print(f"P(gain > 3): {(many > 3).mean():.3f}  (exp(-3) is about 0.050)")

# Now the part that makes the control problem a *team* problem: each agent
# gets its own corrupted copy of the same channel. With quality 1.0 agent 0
# sees the truth; with quality 0.3 agent 1 sees mostly noise.
gamma = np.array([1.0, 0.3])
batch = env.sample_batch_arrays(gamma, sigma_n=0.0, n=5000, rng=rng)
print(f"\nquality levels: {gamma}")
for j in range(2):
    true_flat = batch.true_channel.reshape(5000, -1)
    seen_flat = batch.csi[:, j].reshape(5000, -1)
    corr = np.corrcoef(true_flat.ravel(), seen_flat.ravel())[0, 1]
    err = np.abs(seen_flat - true_flat).mean()
    print(f"agent {j}: corr(seen, true) = {corr:.3f}   "
          f"mean |seen - true| = {err:.3f}")

# Agents do not receive gamma itself either. They receive an estimate of
# it with additive Gaussian noise of scale sigma_n. At sigma_n = 0 the
# estimate is exact; at sigma_n = 0.2 it wobbles around the truth.
for sigma_n in (0.0, 0.2):
    noisy = env.sample_batch_arrays(gamma, sigma_n, 5000, rng)
    est = noisy.quality_estimate
    print(f"\nsigma_n = {sigma_n}: quality estimate mean {est.mean(axis=0)} "
          f"std {est.std(axis=0).round(3)}")

# Reproducibility helper: streams keyed by (seed, tags...) are independent
# of each other but identical across runs.
a = env.substream(42, 1).standard_normal(3)
b = env.substream(42, 1).standard_normal(3)
c = env.substream(42, 2).standard_normal(3)
print(f"\nsubstream(42, 1) twice -> same draws: {np.array_equal(a, b)}")
print(f"substream(42, 2) differs:              {not np.array_equal(a, c)}")
