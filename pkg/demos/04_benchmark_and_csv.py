"""
Benchmarking over a quality trajectory, then writing CSV
========================================================

Deployment is modeled as a sequence of slots during which the agents'
quality levels drift: intervals of 10 slots each, with a fixed quality
vector per interval. The benchmark evaluates every enabled algorithm on
every slot and reports per-slot means with standard errors, which the CSV
writers serialize in a fixed schema (the same one `teammoe bench` emits
and plotkit consumes).

The trajectory and the training run here are shrunk so everything
finishes in about a minute; configs/desk.json holds the reference scale.

Run with:  python3 demos/04_benchmark_and_csv.py
"""

import os
import tempfile

import numpy as np

from teammoe.bench import (BenchConfig, SlotRetrainConfig, Trajectory,
                           run_benchmark, sweep_sigma, trajectory_average,
                           write_results_csv, write_sweep_csv)
from teammoe.train import TrainConfig, train_dmoe

# A four-interval trajectory: perfect knowledge, agent 2 degrading, both
# blind, then both recovered. Three slots per interval keeps it quick.
traj = Trajectory(intervals=(np.array([1.0, 1.0]), np.array([1.0, 0.4]),
                             np.array([0.0, 0.0]), np.array([1.0, 1.0])),
                  slots_per_interval=3)
print(f"trajectory: {traj.n_slots} slots over {len(traj.intervals)} intervals")
for s in (0, 3, 6, 9):
    print(f"  slot {s}: interval {traj.interval_of_slot(s)}, "
          f"quality {traj.quality_for_slot(s)}")

tcfg = TrainConfig(n_train=2000, total_updates=200, batch_size=200,
                   alt_block=50, init_updates=600, lr_init=1e-3, seed=3)
print("\ntraining the mixture team (small run)...")
team, _ = train_dmoe(tcfg, k=2, p_max=1.0)

bcfg = BenchConfig(trajectory=traj, eval_realizations=500, p_max=1.0,
                   algorithms=("dmoe", "oracle", "tdma", "teamdnn",
                               "wmmse_naive"),
                   r_up=(10,), imitation_updates=200, imitation_batch=200,
                   retrain=SlotRetrainConfig(r_up=10, n_slot_train=2000,
                                             batch_size=200, lr=1e-3),
                   seed=0)
print("running the benchmark...")
results = run_benchmark(bcfg, team,
                        progress=lambda i, n: print(f"  slot {i}/{n}",
                                                    end="\r"))
print()

# Per-slot view for the first slot: every algorithm, sorted by name.
print("slot 0 rows:")
for r in [x for x in results if x.slot == 0]:
    print(f"  {r.algorithm:<14} mean {r.mean_sum_rate:.4f} "
          f"+/- {r.std_err:.4f}")

# Whole-trajectory averages collapse the slot dimension.
print("\ntrajectory averages:")
for name in ("oracle", "dmoe", "teamdnn_rup10", "wmmse_naive", "tdma"):
    mean, se = trajectory_average(results, name)
    print(f"  {name:<14} {mean:.4f} +/- {se:.4f}")

# CSV output. The results file has one row per (slot, algorithm); the
# sweep file reruns the mixture under growing quality-estimate noise.
out = tempfile.mkdtemp(prefix="bench_demo_")
results_path = os.path.join(out, "bench_results.csv")
write_results_csv(results, results_path)
print(f"\nwrote {results_path}")
with open(results_path) as f:
    for line in [next(f) for _ in range(3)]:
        print(f"  {line.rstrip()}")

sweep = sweep_sigma(bcfg, [0.0, 0.1, 0.2], team)
sweep_path = os.path.join(out, "sigma_sweep.csv")
write_sweep_csv(sweep, sweep_path)
print(f"\nwrote {sweep_path}")
with open(sweep_path) as f:
    print("  " + f.read().rstrip().replace("\n", "\n  "))

print("\nplotkit (the sibling package) turns these files into figures, e.g.")
print(f"  plot --kind sumrate --in {results_path} --out rates.png")
