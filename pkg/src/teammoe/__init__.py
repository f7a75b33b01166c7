"""Decentralized power control on a K-user interference channel with noisy CSIT.

Each transmitter picks its own power from a private noisy view of the gain
matrix plus a shared estimate of everyone's feedback quality. The package
provides the channel/observation sampler, the sum-rate objective with exact
gradients, a small MLP kernel, learned team policies (a quality-gated mixture
of experts and a plain per-agent net), classical baselines (WMMSE, TDMA, a
grid-search oracle), training loops, and a time-slotted benchmark with CSV
output.
"""

from .env import (Observation, Sample, SampleBatch, corrupt_csi,
                  estimate_quality, sample_batch, sample_batch_arrays,
                  sample_channel, sample_gains, sample_mixed_quality_batch,
                  sample_quality_uniform, slice_batch, substream)
from .rate import sum_rate, sum_rate_batch, sum_rate_grad, sum_rate_grad_batch
from .net import (MlpParams, OptimizerState, backward, forward, init_mlp,
                  init_optimizer, load_mlp, optimizer_step, save_mlp)
from .policies import (DmoePolicy, TeamDnnPolicy, dmoe_decide,
                       dmoe_decide_batch, load_team, make_dmoe_policy,
                       make_teamdnn_policy, naive_wmmse_team,
                       naive_wmmse_team_batch, perfect_csi_oracle,
                       perfect_csi_oracle_batch, save_team, tdma_powers,
                       teamdnn_decide, teamdnn_decide_batch, wmmse_powers,
                       wmmse_powers_batch, wmmse_powers_trace)
from .train import (SlotRetrainConfig, TrainConfig, TrainRecord, gating_labels,
                    gating_step, pretrain_experts, pretrain_to_wmmse,
                    retrain_slot, team_sumrate_step, train_dmoe)
from .bench import (BenchConfig, SlotResult, SweepResult, Trajectory,
                    default_trajectory, run_benchmark, sweep_sigma,
                    trajectory_average, write_results_csv, write_sweep_csv,
                    write_train_log_csv)

__version__ = "0.1.0"

__all__ = [
    "Observation", "Sample", "SampleBatch", "corrupt_csi", "estimate_quality",
    "sample_batch", "sample_batch_arrays", "sample_channel", "sample_gains",
    "sample_mixed_quality_batch", "sample_quality_uniform", "slice_batch",
    "substream",
    "sum_rate", "sum_rate_batch", "sum_rate_grad", "sum_rate_grad_batch",
    "MlpParams", "OptimizerState", "backward", "forward", "init_mlp",
    "init_optimizer", "load_mlp", "optimizer_step", "save_mlp",
    "DmoePolicy", "TeamDnnPolicy", "dmoe_decide", "dmoe_decide_batch",
    "load_team", "make_dmoe_policy", "make_teamdnn_policy", "naive_wmmse_team",
    "naive_wmmse_team_batch", "perfect_csi_oracle", "perfect_csi_oracle_batch",
    "save_team", "tdma_powers", "teamdnn_decide", "teamdnn_decide_batch",
    "wmmse_powers", "wmmse_powers_batch", "wmmse_powers_trace",
    "SlotRetrainConfig", "TrainConfig", "TrainRecord", "gating_labels",
    "gating_step", "pretrain_experts", "pretrain_to_wmmse", "retrain_slot",
    "team_sumrate_step", "train_dmoe",
    "BenchConfig", "SlotResult", "SweepResult", "Trajectory",
    "default_trajectory", "run_benchmark", "sweep_sigma", "trajectory_average",
    "write_results_csv", "write_sweep_csv", "write_train_log_csv",
    "__version__",
]
