"""Time-slotted benchmark over a CSIT-quality trajectory.

Every slot draws fresh Monte Carlo realizations at that slot's quality level,
evaluates each enabled algorithm's power decisions on them, and records the
mean sum-rate on the true channel with its standard error. Draws are keyed by
(seed, stream, slot) so every algorithm — and every sigma_n value in a sweep —
sees identical channels (common random numbers). Evaluation is single-threaded
with a fixed reduction order, so equal seeds reproduce CSV files byte for byte.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import env, net
from .policies import (dmoe_decide_batch, make_teamdnn_policy,
                       naive_wmmse_team_batch, perfect_csi_oracle_batch,
                       tdma_powers, teamdnn_decide_batch)
from .rate import sum_rate_batch
from .train import SlotRetrainConfig, TrainConfig, pretrain_to_wmmse, retrain_slot

_STREAM_EVAL = 10
_STREAM_TDNN_INIT = 11
_STREAM_IMITATE = 12
_STREAM_RETRAIN = 13

ALGORITHMS = ("dmoe", "oracle", "tdma", "teamdnn", "wmmse_naive")

RESULTS_HEADER = "slot,interval,gamma1,gamma2,algorithm,mean_sum_rate,std_err"
SWEEP_HEADER = "sigma_n,mean_sum_rate,std_err"


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant quality schedule: one vector per interval, each
    interval spanning `slots_per_interval` consecutive slots."""

    intervals: tuple            # of (K,) quality vectors
    slots_per_interval: int = 10

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("trajectory needs at least one interval")
        if self.slots_per_interval < 1:
            raise ValueError("slots_per_interval must be >= 1")
        object.__setattr__(self, "intervals",
                           tuple(np.asarray(v, dtype=np.float64) for v in self.intervals))
        k = self.intervals[0].shape[0]
        for v in self.intervals:
            if v.shape != (k,):
                raise ValueError("all intervals must have the same number of agents")
            env.validate_quality(v)

    @property
    def k(self) -> int:
        return self.intervals[0].shape[0]

    @property
    def n_slots(self) -> int:
        return len(self.intervals) * self.slots_per_interval

    def quality_for_slot(self, slot: int) -> np.ndarray:
        if not 0 <= slot < self.n_slots:
            raise ValueError(f"slot {slot} out of range [0, {self.n_slots})")
        return self.intervals[slot // self.slots_per_interval]

    def interval_of_slot(self, slot: int) -> int:
        """1-based interval index of a 0-based slot."""
        if not 0 <= slot < self.n_slots:
            raise ValueError(f"slot {slot} out of range [0, {self.n_slots})")
        return slot // self.slots_per_interval + 1


_DEFAULT_INTERVALS = (
    (1.0, 1.0), (1.0, 0.8), (1.0, 0.6), (1.0, 0.4), (1.0, 0.2),
    (1.0, 0.0), (0.8, 0.0), (0.6, 0.0), (0.4, 0.0), (0.2, 0.0),
    (0.0, 0.0), (0.2, 0.2), (0.4, 0.4), (0.6, 0.6), (0.8, 0.8),
    (1.0, 1.0), (1.0, 0.5), (0.5, 1.0), (0.5, 0.5), (1.0, 1.0),
)


def default_trajectory() -> Trajectory:
    """Twenty intervals for two agents: perfect CSIT, agent 2's quality ramping
    to zero by interval 6, agent 1's to zero by interval 11, joint linear
    recovery to interval 16, then mixed revisits (1,.5),(.5,1),(.5,.5),(1,1).
    Ramps are piecewise-linear between those anchors."""
    return Trajectory(intervals=_DEFAULT_INTERVALS, slots_per_interval=10)


@dataclass(frozen=True)
class BenchConfig:
    trajectory: Trajectory = field(default_factory=default_trajectory)
    eval_realizations: int = 10000
    sigma_n: float = 0.0
    p_max: float = 1.0
    algorithms: tuple = ALGORITHMS
    r_up: tuple = (10, 100)    # retraining budgets, one teamdnn row set each
    seed: int = 0
    grid_points: int = 101
    wmmse_max_iter: int = 200
    wmmse_tol: float = 1e-6
    imitation_updates: int = 2000
    imitation_batch: int = 1000
    lr_imitation: float = 1e-3
    retrain: SlotRetrainConfig = field(default_factory=SlotRetrainConfig)

    def __post_init__(self):
        if self.eval_realizations < 1:
            raise ValueError("eval_realizations must be >= 1")
        if self.sigma_n < 0:
            raise ValueError("sigma_n must be nonnegative")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if "teamdnn" in self.algorithms:
            if not self.r_up:
                raise ValueError("teamdnn enabled but no r_up values given")
            if any(r < 0 for r in self.r_up):
                raise ValueError("r_up values must be >= 0")


@dataclass(frozen=True)
class SlotResult:
    slot: int           # 0-based
    interval: int       # 1-based
    quality: np.ndarray  # true per-agent quality this slot
    algorithm: str
    mean_sum_rate: float
    std_err: float


@dataclass(frozen=True)
class SweepResult:
    sigma_n: float
    mean_sum_rate: float
    std_err: float


def _mean_se(rates: np.ndarray):
    n = rates.shape[0]
    se = float(rates.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(rates.mean()), se


def run_benchmark(cfg: BenchConfig, trained, progress=None):
    """Evaluate every enabled algorithm on every trajectory slot.

    `trained` is the mixture policy team (one policy per agent) used for the
    "dmoe" rows; it must match the trajectory's agent count and cfg.p_max.
    The plain-net baseline is imitation-pretrained once at the first
    interval's quality, then each r_up variant is retrained before every
    slot's evaluation. Returns SlotResults ordered by (slot, algorithm name).
    """
    traj = cfg.trajectory
    k = traj.k
    if "dmoe" in cfg.algorithms:
        if len(trained) != k or any(p.k != k for p in trained):
            raise ValueError("trained policy team does not match trajectory agents")
        if any(p.p_max != cfg.p_max for p in trained):
            raise ValueError("trained policy p_max does not match cfg.p_max")

    tdnn_teams = {}
    if "teamdnn" in cfg.algorithms:
        init_rng = env.substream(cfg.seed, _STREAM_TDNN_INIT)
        base = [make_teamdnn_policy(k, cfg.p_max, init_rng) for _ in range(k)]
        icfg = TrainConfig(batch_size=cfg.imitation_batch,
                           imitation_updates=cfg.imitation_updates,
                           lr_imitation=cfg.lr_imitation, seed=cfg.seed)
        base = pretrain_to_wmmse(base, icfg, traj.intervals[0],
                                 env.substream(cfg.seed, _STREAM_IMITATE),
                                 cfg.wmmse_max_iter, cfg.wmmse_tol)
        for r in cfg.r_up:
            states = [net.init_optimizer(p.net, lr=cfg.retrain.lr) for p in base]
            tdnn_teams[r] = (list(base), states)

    results = []
    for slot in range(traj.n_slots):
        gamma = traj.quality_for_slot(slot)
        ev = env.sample_batch_arrays(gamma, cfg.sigma_n, cfg.eval_realizations,
                                     env.substream(cfg.seed, _STREAM_EVAL, slot))
        powers_by_name = {}
        if "dmoe" in cfg.algorithms:
            powers_by_name["dmoe"] = np.stack(
                [dmoe_decide_batch(trained[j], ev.csi[:, j], ev.quality_estimate)
                 for j in range(k)], axis=1)
        if "oracle" in cfg.algorithms:
            powers_by_name["oracle"] = perfect_csi_oracle_batch(
                ev.true_channel, cfg.p_max, cfg.grid_points)
        if "tdma" in cfg.algorithms:
            powers_by_name["tdma"] = np.broadcast_to(
                tdma_powers(k, slot, cfg.p_max), (ev.n, k))
        if "wmmse_naive" in cfg.algorithms:
            powers_by_name["wmmse_naive"] = naive_wmmse_team_batch(
                ev.csi, cfg.p_max, cfg.wmmse_max_iter, cfg.wmmse_tol)
        for ri, r in enumerate(sorted(tdnn_teams)):
            team, states = tdnn_teams[r]
            src = replace(cfg.retrain, r_up=r)
            team, states = retrain_slot(team, src, gamma, states,
                                        env.substream(cfg.seed, _STREAM_RETRAIN, slot, ri))
            tdnn_teams[r] = (team, states)
            powers_by_name[f"teamdnn_rup{r}"] = np.stack(
                [teamdnn_decide_batch(team[j], ev.csi[:, j]) for j in range(k)], axis=1)

        for name in sorted(powers_by_name):
            rates = sum_rate_batch(ev.true_channel, powers_by_name[name])
            mean, se = _mean_se(rates)
            if not (np.isfinite(mean) and np.isfinite(se)):
                raise FloatingPointError(
                    f"non-finite statistics for algorithm {name!r} at slot {slot} "
                    f"(quality {gamma.tolist()}, sigma_n {cfg.sigma_n})")
            results.append(SlotResult(slot=slot, interval=traj.interval_of_slot(slot),
                                      quality=gamma, algorithm=name,
                                      mean_sum_rate=mean, std_err=se))
        if progress is not None:
            progress(slot + 1, traj.n_slots)
    return results


def trajectory_average(results, algorithm: str):
    """Mean over slots of one algorithm's per-slot means, with the propagated
    standard error (slot draws are independent)."""
    rows = [r for r in results if r.algorithm == algorithm]
    if not rows:
        raise ValueError(f"no results for algorithm {algorithm!r}")
    means = np.array([r.mean_sum_rate for r in rows])
    ses = np.array([r.std_err for r in rows])
    return float(means.mean()), float(np.sqrt((ses ** 2).sum()) / len(rows))


def sweep_sigma(cfg: BenchConfig, sigma_list, trained, progress=None):
    """Trajectory-averaged mixture-policy sum-rate per sigma_n value.

    Channel draws are shared across sigma_n values (only the estimate noise
    scaling differs), so entries are directly comparable.
    """
    if len(sigma_list) == 0:
        raise ValueError("sigma_list must be nonempty")
    out = []
    for i, s in enumerate(sigma_list):
        sub = replace(cfg, sigma_n=float(s), algorithms=("dmoe",))
        res = run_benchmark(sub, trained)
        mean, se = trajectory_average(res, "dmoe")
        out.append(SweepResult(sigma_n=float(s), mean_sum_rate=mean, std_err=se))
        if progress is not None:
            progress(i + 1, len(sigma_list))
    return out


# --- CSV emission ---------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def write_results_csv(results, path) -> None:
    """Exact schema: slot,interval,gamma1,gamma2,algorithm,mean_sum_rate,std_err
    with 6-significant-digit floats, rows ordered by (slot, algorithm)."""
    rows = sorted(results, key=lambda r: (r.slot, r.algorithm))
    lines = [RESULTS_HEADER]
    for r in rows:
        if r.quality.shape[0] != 2:
            raise ValueError("results CSV schema covers two-agent runs only")
        lines.append(",".join([str(r.slot), str(r.interval),
                               _fmt(r.quality[0]), _fmt(r.quality[1]),
                               r.algorithm, _fmt(r.mean_sum_rate), _fmt(r.std_err)]))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def write_sweep_csv(rows, path) -> None:
    lines = [SWEEP_HEADER]
    for r in rows:
        lines.append(",".join([_fmt(r.sigma_n), _fmt(r.mean_sum_rate), _fmt(r.std_err)]))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def write_train_log_csv(records, path) -> None:
    """Per-update training log: update,phase,objective,routed_<e> columns."""
    n_e = len(records[0].routed) if records else 0
    header = "update,phase,objective" + "".join(f",routed_{e}" for e in range(n_e))
    lines = [header]
    for r in records:
        lines.append(",".join([str(r.update), r.phase, _fmt(r.objective),
                               *[str(c) for c in r.routed]]))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")
