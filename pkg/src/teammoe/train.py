"""Training loops for the learned policies.

Mixture policy: expert columns are warm-started at anchor quality levels
(perfect and blind), then the team alternates between blocks of routed
sum-rate ascent on the experts and cross-entropy descent on the gating nets.
Plain team nets: imitation regression onto per-agent WMMSE targets, plus a
per-slot sum-rate retraining loop.

All loops are deterministic functions of their configs and seeds.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import env, net, rate
from .policies import (expert_input, gating_weights_batch, make_dmoe_policy,
                       wmmse_powers_batch)

_STREAM_INIT = 0
_STREAM_PRETRAIN = 1
_STREAM_DATASET = 2
_STREAM_BATCH = 3


@dataclass(frozen=True)
class TrainConfig:
    """Sizes, learning rates and seed for mixture training."""

    n_train: int = 100000       # training-set size
    total_updates: int = 8000   # alternating updates after warm start
    batch_size: int = 1000
    alt_block: int = 50         # updates per expert/gating block
    init_updates: int = 1000    # warm-start updates per expert column
    imitation_updates: int = 2000
    lr_expert: float = 1e-3
    lr_gating: float = 1e-3
    lr_init: float = 1e-3
    lr_imitation: float = 1e-3
    sigma_n: float = 0.0        # quality-estimate noise during training
    seed: int = 0

    def __post_init__(self):
        for name in ("n_train", "total_updates", "batch_size", "alt_block",
                     "init_updates", "imitation_updates"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.batch_size > self.n_train:
            raise ValueError("batch_size must not exceed n_train")
        for name in ("lr_expert", "lr_gating", "lr_init", "lr_imitation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma_n < 0:
            raise ValueError("sigma_n must be nonnegative")


@dataclass(frozen=True)
class SlotRetrainConfig:
    """Per-slot adaptation budget for the plain team nets."""

    r_up: int = 10              # gradient updates per slot; 0 disables retraining
    n_slot_train: int = 30000   # fresh samples drawn each slot
    batch_size: int = 1000
    lr: float = 1e-3

    def __post_init__(self):
        if self.r_up < 0:
            raise ValueError("r_up must be >= 0")
        if self.n_slot_train < 1 or self.batch_size < 1:
            raise ValueError("n_slot_train and batch_size must be >= 1")
        if self.batch_size > self.n_slot_train:
            raise ValueError("batch_size must not exceed n_slot_train")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass(frozen=True)
class TrainRecord:
    """One logged update: phase tag, batch objective, per-expert routed counts."""

    update: int
    phase: str          # "expert" or "gating"
    objective: float    # batch-mean sum-rate, or mean gating cross-entropy
    routed: tuple       # samples routed/labelled per expert this update


def team_objective_grads(nets, inputs, true_channel: np.ndarray, p_max: float):
    """Batch-mean team sum-rate and its gradients w.r.t. every agent's net.

    Each net maps its own input rows to one sigmoid output, scaled by p_max
    into a power; the joint powers feed the sum-rate and the chain rule
    splits the gradient per agent. Returns (objective, list of per-net grads).
    """
    n = true_channel.shape[0]
    caches, powers = [], []
    for net_i, x in zip(nets, inputs):
        y, cache = net.forward(net_i, x)
        caches.append(cache)
        powers.append(p_max * y[:, 0])
    p = np.stack(powers, axis=1)
    rates = rate.sum_rate_batch(true_channel, p)
    drate = rate.sum_rate_grad_batch(true_channel, p)
    grads = []
    for i, (net_i, cache) in enumerate(zip(nets, caches)):
        d_out = (p_max / n) * drate[:, i:i + 1]
        g, _ = net.backward(net_i, cache, d_out)
        grads.append(g)
    return float(rates.mean()), grads


def team_sumrate_step(nets, inputs, true_channel: np.ndarray, p_max: float,
                      opt_states):
    """One joint ascent step on the batch-mean sum-rate for a team of nets.

    Returns (nets, opt_states, pre-update batch objective).
    """
    objective, grads = team_objective_grads(nets, inputs, true_channel, p_max)
    new_nets, new_states = [], []
    for net_i, g, st in zip(nets, grads, opt_states):
        nn, ns = net.optimizer_step(net_i, g, st, "ascend")
        new_nets.append(nn)
        new_states.append(ns)
    return new_nets, new_states, objective


_RECENTER_EVERY = 250   # warm-start saturation check cadence (steps)
_RECENTER_CAP = 2.0     # largest allowed batch-mean output pre-activation
_RECENTER_STEPS = 6000  # recentering window; later steps refine untouched


def _recenter_output(m: net.MlpParams, x: np.ndarray,
                     cap: float = _RECENTER_CAP) -> net.MlpParams:
    """Shift a sigmoid output bias down if its batch-mean pre-activation
    exceeds `cap`; otherwise return the net unchanged.

    Joint ascent from a near-symmetric start reliably races one agent's
    output sigmoid into saturation: that agent freezes at full power while
    the other best-responds around it, and the team stalls in an
    uncoordinated equilibrium well below the optimum. Capping the mean
    pre-activation keeps every output responsive so the coordinated
    (role-switching) solution stays reachable.
    """
    last = m.layers[-1]
    if last.activation != "sigmoid":
        return m
    _, cache = net.forward(m, x)
    zbar = cache.pre[-1].mean()
    if zbar <= cap:
        return m
    shifted = net.Layer(w=last.w, b=last.b - (zbar - cap), activation=last.activation)
    return net.MlpParams(layers=m.layers[:-1] + (shifted,))


def pretrain_experts(policies, cfg: TrainConfig, rng: np.random.Generator):
    """Warm-start the expert columns at their anchor quality levels.

    Expert 0 trains on perfect-quality samples (gamma = 1 for every agent),
    expert 1 on blind ones (gamma = 0); same-index experts across agents
    update jointly on the shared sum-rate. During the first half of the
    updates (capped at a fixed step budget), saturated output sigmoids are
    recentered (see :func:`_recenter_output`); later steps refine untouched.
    Extra expert columns, if any, keep their initialization.
    """
    k, p_max = policies[0].k, policies[0].p_max
    experts = [list(p.experts) for p in policies]
    recenter_until = min(_RECENTER_STEPS, cfg.init_updates // 2)
    for e_idx, gamma_val in ((0, 1.0), (1, 0.0)):
        if e_idx >= policies[0].n_e:
            break
        quality = np.full(k, gamma_val)
        nets = [experts[j][e_idx] for j in range(k)]
        states = [net.init_optimizer(m, lr=cfg.lr_init) for m in nets]
        for step in range(cfg.init_updates):
            batch = env.sample_batch_arrays(quality, cfg.sigma_n, cfg.batch_size, rng)
            inputs = [expert_input(batch.csi[:, j], batch.quality_estimate)
                      for j in range(k)]
            nets, states, _ = team_sumrate_step(nets, inputs, batch.true_channel,
                                                p_max, states)
            if step < recenter_until and (step + 1) % _RECENTER_EVERY == 0:
                nets = [_recenter_output(nets[j], inputs[j]) for j in range(k)]
        for j in range(k):
            experts[j][e_idx] = nets[j]
    return [replace(p, experts=tuple(experts[j])) for j, p in enumerate(policies)]


def gating_labels(policies, batch: env.SampleBatch) -> np.ndarray:
    """Index of the jointly best expert column per sample (ties -> lowest index).

    "Best" means the team sum-rate on the true channel when every agent uses
    the same expert column on its own observation.
    """
    n_e, p_max = policies[0].n_e, policies[0].p_max
    rates = np.empty((batch.n, n_e))
    for e_idx in range(n_e):
        powers = np.stack([
            p_max * net.forward(pol.experts[e_idx],
                                expert_input(batch.csi[:, j], batch.quality_estimate))[0][:, 0]
            for j, pol in enumerate(policies)
        ], axis=1)
        rates[:, e_idx] = rate.sum_rate_batch(batch.true_channel, powers)
    return np.argmax(rates, axis=1)


def gating_step(policies, batch: env.SampleBatch, opt_states):
    """One cross-entropy descent step of every gating net toward the jointly
    best expert labels; experts stay frozen.

    Returns (policies, opt_states, mean cross-entropy over agents, labels).
    """
    labels = gating_labels(policies, batch)
    rows = np.arange(batch.n)
    new_pols, new_states, ces = [], [], []
    for pol, st in zip(policies, opt_states):
        probs, cache = net.forward(pol.gating, batch.quality_estimate)
        picked = np.maximum(probs[rows, labels], 1e-300)
        ces.append(-np.log(picked).mean())
        d_out = np.zeros_like(probs)
        d_out[rows, labels] = -1.0 / (picked * batch.n)
        grads, _ = net.backward(pol.gating, cache, d_out)
        gnew, stnew = net.optimizer_step(pol.gating, grads, st, "descend")
        new_pols.append(replace(pol, gating=gnew))
        new_states.append(stnew)
    return new_pols, new_states, float(np.mean(ces)), labels


def _expert_update(policies, batch: env.SampleBatch, expert_states):
    """Hard-route the batch by the team-mean gating argmax, then ascend each
    expert column on its routed sub-batch. Empty routes are skipped (their
    routed count in the record is 0)."""
    k, n_e, p_max = len(policies), policies[0].n_e, policies[0].p_max
    gate = np.mean([gating_weights_batch(pol, batch.quality_estimate)
                    for pol in policies], axis=0)
    route = np.argmax(gate, axis=1)
    counts = np.bincount(route, minlength=n_e)
    experts = [list(p.experts) for p in policies]
    states = [list(s) for s in expert_states]
    total = 0.0
    for e_idx in range(n_e):
        mask = route == e_idx
        m = int(mask.sum())
        if m == 0:
            continue
        sub = env.slice_batch(batch, mask)
        nets = [experts[j][e_idx] for j in range(k)]
        sts = [states[j][e_idx] for j in range(k)]
        inputs = [expert_input(sub.csi[:, j], sub.quality_estimate) for j in range(k)]
        nets, sts, obj = team_sumrate_step(nets, inputs, sub.true_channel, p_max, sts)
        for j in range(k):
            experts[j][e_idx] = nets[j]
            states[j][e_idx] = sts[j]
        total += obj * m
    policies = [replace(p, experts=tuple(experts[j])) for j, p in enumerate(policies)]
    return policies, states, total / batch.n, counts


def train_dmoe(cfg: TrainConfig, k: int = 2, p_max: float = 1.0,
               checkpoint_every: int = 0, checkpoint_cb=None):
    """End-to-end mixture training; deterministic given (cfg, k, p_max).

    Phases: network init, expert warm start, then `total_updates` alternating
    updates in blocks of `alt_block` (expert blocks first). Expert blocks
    hard-route each batch by the team-mean gating and ascend the routed
    sub-batches; gating blocks descend on cross-entropy against the jointly
    best expert. Returns (policies, records).

    If `checkpoint_every` > 0, `checkpoint_cb(update_count, policies)` runs
    after every that-many updates (checkpointing does not affect training).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    init_rng = env.substream(cfg.seed, _STREAM_INIT)
    policies = [make_dmoe_policy(k, p_max, init_rng) for _ in range(k)]
    policies = pretrain_experts(policies, cfg, env.substream(cfg.seed, _STREAM_PRETRAIN))
    dataset = env.sample_mixed_quality_batch(k, cfg.sigma_n, cfg.n_train,
                                             env.substream(cfg.seed, _STREAM_DATASET))
    batch_rng = env.substream(cfg.seed, _STREAM_BATCH)
    n_e = policies[0].n_e
    expert_states = [[net.init_optimizer(policies[j].experts[e], lr=cfg.lr_expert)
                      for e in range(n_e)] for j in range(k)]
    gating_states = [net.init_optimizer(p.gating, lr=cfg.lr_gating) for p in policies]
    records = []
    for upd in range(cfg.total_updates):
        idx = batch_rng.integers(0, cfg.n_train, cfg.batch_size)
        batch = env.slice_batch(dataset, idx)
        if (upd // cfg.alt_block) % 2 == 0:
            policies, expert_states, objective, routed = _expert_update(
                policies, batch, expert_states)
            phase = "expert"
        else:
            policies, gating_states, objective, labels = gating_step(
                policies, batch, gating_states)
            routed = np.bincount(labels, minlength=n_e)
            phase = "gating"
        records.append(TrainRecord(update=upd, phase=phase, objective=float(objective),
                                   routed=tuple(int(c) for c in routed)))
        if checkpoint_every > 0 and checkpoint_cb is not None \
                and (upd + 1) % checkpoint_every == 0:
            checkpoint_cb(upd + 1, policies)
    return policies, records


def pretrain_to_wmmse(policies, cfg: TrainConfig, quality,
                      rng: np.random.Generator, max_iter: int = 200,
                      tol: float = 1e-6):
    """Regress each plain net onto its own-CSI WMMSE power component.

    Squared error on the normalized output (power / p_max), one descent step
    per batch per agent; the nets never see the quality estimate.
    """
    k, p_max = policies[0].k, policies[0].p_max
    quality = np.asarray(quality, dtype=np.float64)
    nets = [p.net for p in policies]
    states = [net.init_optimizer(m, lr=cfg.lr_imitation) for m in nets]
    for _ in range(cfg.imitation_updates):
        batch = env.sample_batch_arrays(quality, 0.0, cfg.batch_size, rng)
        for j in range(k):
            target = wmmse_powers_batch(batch.csi[:, j], p_max, max_iter, tol)[:, j] / p_max
            x = batch.csi[:, j].reshape(batch.n, -1)
            y, cache = net.forward(nets[j], x)
            d_out = (2.0 / batch.n) * (y[:, 0] - target)[:, None]
            grads, _ = net.backward(nets[j], cache, d_out)
            nets[j], states[j] = net.optimizer_step(nets[j], grads, states[j], "descend")
    return [replace(p, net=nets[j]) for j, p in enumerate(policies)]


def retrain_slot(policies, src: SlotRetrainConfig, quality, opt_states,
                 rng: np.random.Generator):
    """Adapt the plain team nets to one slot's quality level.

    Draws a fresh slot training set at the given quality and takes r_up joint
    sum-rate ascent steps on sampled batches. r_up = 0 returns everything
    unchanged. Optimizer state threads through so callers can persist it
    across slots.
    """
    if src.r_up == 0:
        return list(policies), list(opt_states)
    k, p_max = len(policies), policies[0].p_max
    data = env.sample_batch_arrays(np.asarray(quality, dtype=np.float64), 0.0,
                                   src.n_slot_train, rng)
    nets = [p.net for p in policies]
    states = list(opt_states)
    for _ in range(src.r_up):
        idx = rng.integers(0, src.n_slot_train, src.batch_size)
        sub = env.slice_batch(data, idx)
        inputs = [sub.csi[:, j].reshape(sub.n, -1) for j in range(k)]
        nets, states, _ = team_sumrate_step(nets, inputs, sub.true_channel,
                                            p_max, states)
    return [replace(p, net=nets[j]) for j, p in enumerate(policies)], states
