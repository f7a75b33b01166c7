"""Decision policies mapping local observations to transmit powers.

Two learned policy kinds (a mixture-of-experts policy gated by the shared
quality estimate, and a plain per-agent net) plus three non-learned baselines:
scalar WMMSE, round-robin TDMA, and an exhaustive grid-search oracle on the
true channel.

Learned-policy input layout (version 1, serialized with checkpoints):
  * expert input  = row-major flattened own CSI followed by the quality estimate;
  * gating input  = the quality estimate alone;
  * plain-net input = row-major flattened own CSI (no quality estimate; that
    policy kind is retrained per noise configuration, making it redundant).
"""

import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import net
from .env import Observation

INPUT_LAYOUT_VERSION = 1

_TEAM_FORMAT = "teammoe-policy-team"
_TEAM_VERSION = 1

EXPERT_HIDDEN = (10, 10, 10)
GATING_HIDDEN = (10, 10)


@dataclass(frozen=True)
class DmoePolicy:
    """Per-agent mixture policy: n_e expert nets blended by a gating net."""

    experts: tuple      # n_e MlpParams, input k*k + k -> 1 (sigmoid)
    gating: net.MlpParams  # input k -> n_e (softmax)
    p_max: float
    n_e: int
    k: int


@dataclass(frozen=True)
class TeamDnnPolicy:
    """Per-agent plain net from own CSI to one power."""

    net: net.MlpParams  # input k*k -> 1 (sigmoid)
    p_max: float
    k: int


def make_dmoe_policy(k: int, p_max: float, rng: np.random.Generator,
                     n_e: int = 2, expert_hidden=EXPERT_HIDDEN,
                     gating_hidden=GATING_HIDDEN) -> DmoePolicy:
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_e < 1:
        raise ValueError("n_e must be >= 1")
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    expert_sizes = [k * k + k, *expert_hidden, 1]
    expert_acts = ["relu"] * len(expert_hidden) + ["sigmoid"]
    gating_sizes = [k, *gating_hidden, n_e]
    gating_acts = ["relu"] * len(gating_hidden) + ["softmax"]
    experts = tuple(net.init_mlp(expert_sizes, expert_acts, rng) for _ in range(n_e))
    gating = net.init_mlp(gating_sizes, gating_acts, rng)
    return DmoePolicy(experts=experts, gating=gating, p_max=float(p_max), n_e=n_e, k=k)


def make_teamdnn_policy(k: int, p_max: float, rng: np.random.Generator,
                        hidden=EXPERT_HIDDEN) -> TeamDnnPolicy:
    if k < 1:
        raise ValueError("k must be >= 1")
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    sizes = [k * k, *hidden, 1]
    acts = ["relu"] * len(hidden) + ["sigmoid"]
    return TeamDnnPolicy(net=net.init_mlp(sizes, acts, rng), p_max=float(p_max), k=k)


def expert_input(csi: np.ndarray, quality_estimate: np.ndarray) -> np.ndarray:
    """(n, k, k) CSI and (n, k) estimates -> (n, k*k + k) expert input rows."""
    n = csi.shape[0]
    return np.concatenate([csi.reshape(n, -1), quality_estimate], axis=1)


def expert_outputs_batch(pol: DmoePolicy, csi: np.ndarray,
                         quality_estimate: np.ndarray) -> np.ndarray:
    """Per-expert powers, shape (n, n_e), each within [0, p_max]."""
    x = expert_input(csi, quality_estimate)
    outs = [pol.p_max * net.forward(e, x)[0][:, 0] for e in pol.experts]
    return np.stack(outs, axis=1)


def gating_weights_batch(pol: DmoePolicy, quality_estimate: np.ndarray) -> np.ndarray:
    """Gating softmax over experts, shape (n, n_e)."""
    return net.forward(pol.gating, quality_estimate)[0]


def dmoe_decide_batch(pol: DmoePolicy, csi: np.ndarray,
                      quality_estimate: np.ndarray) -> np.ndarray:
    """Mixture powers for a batch: gate-weighted sum of expert powers."""
    outs = expert_outputs_batch(pol, csi, quality_estimate)
    gate = gating_weights_batch(pol, quality_estimate)
    return (outs * gate).sum(axis=1)


def dmoe_decide(pol: DmoePolicy, obs: Observation) -> float:
    _check_obs(obs, pol.k)
    p = dmoe_decide_batch(pol, obs.csi[None], obs.quality_estimate[None])
    return float(p[0])


def teamdnn_decide_batch(pol: TeamDnnPolicy, csi: np.ndarray) -> np.ndarray:
    n = csi.shape[0]
    return pol.p_max * net.forward(pol.net, csi.reshape(n, -1))[0][:, 0]


def teamdnn_decide(pol: TeamDnnPolicy, obs: Observation) -> float:
    _check_obs(obs, pol.k)
    return float(teamdnn_decide_batch(pol, obs.csi[None])[0])


def _check_obs(obs: Observation, k: int):
    if obs.csi.shape != (k, k):
        raise ValueError(f"observation CSI shape {obs.csi.shape} does not match k={k}")
    if not (np.all(np.isfinite(obs.csi)) and np.all(np.isfinite(obs.quality_estimate))):
        raise ValueError("observation must be finite")
    if obs.quality_estimate.shape != (k,):
        raise ValueError("quality estimate length does not match k")


# --- scalar WMMSE power control ----------------------------------------------

def wmmse_powers(g_hat: np.ndarray, p_max: float, max_iter: int = 200,
                 tol: float = 1e-6) -> np.ndarray:
    """Iteratively-weighted-MMSE power allocation for scalar links.

    Works on amplitudes h = sqrt(g_hat); alternates the MMSE receiver, the
    MSE-inverse weights and the box-clipped transmit amplitudes, starting from
    full power, until max |dv| < tol or max_iter.
    """
    p, _ = _wmmse_core(np.asarray(g_hat, dtype=np.float64)[None], p_max, max_iter, tol)
    return p[0]


def wmmse_powers_trace(g_hat: np.ndarray, p_max: float, max_iter: int = 200,
                       tol: float = 1e-6):
    """As :func:`wmmse_powers`, also returning the per-iteration weighted-MSE
    surrogate values sum_i (w_i e_i - log w_i), which are non-increasing."""
    p, trace = _wmmse_core(np.asarray(g_hat, dtype=np.float64)[None], p_max,
                           max_iter, tol, want_trace=True)
    return p[0], np.array([t[0] for t in trace])


def wmmse_powers_batch(g_hat: np.ndarray, p_max: float, max_iter: int = 200,
                       tol: float = 1e-6) -> np.ndarray:
    """Vectorized WMMSE over (n, K, K) gain matrices; per-row early stopping
    reproduces the scalar routine exactly."""
    p, _ = _wmmse_core(np.asarray(g_hat, dtype=np.float64), p_max, max_iter, tol)
    return p


def _wmmse_core(g: np.ndarray, p_max: float, max_iter: int, tol: float,
                want_trace: bool = False):
    if g.ndim != 3 or g.shape[1] != g.shape[2]:
        raise ValueError(f"expected (n, K, K) gains, got shape {g.shape}")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite and nonnegative")
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    n, k, _ = g.shape
    h = np.sqrt(g)                  # (n, K): h[m, j, i] amplitude TX j -> RX i
    hsq = g
    hdiag = np.einsum("nii->ni", h)
    vmax = np.sqrt(p_max)
    v = np.full((n, k), vmax)
    u = np.zeros((n, k))
    w = np.ones((n, k))
    active = np.ones(n, dtype=bool)
    trace = [] if want_trace else None

    for _ in range(max_iter):
        if not active.any():
            break
        ha, hsqa, hda, va = h[active], hsq[active], hdiag[active], v[active]
        # MMSE receiver: u_i = h_ii v_i / (1 + sum_j h_ji^2 v_j^2)
        rx = 1.0 + np.einsum("nji,nj->ni", hsqa, va ** 2)
        ua = hda * va / rx
        # weights w_i = 1 / (1 - u_i h_ii v_i), denominator floored
        wa = 1.0 / np.maximum(1.0 - ua * hda * va, 1e-12)
        # transmit update, clipped to [0, sqrt(p_max)]
        den = np.einsum("nj,nij->ni", wa * ua ** 2, hsqa)
        va_new = np.clip(wa * ua * hda / np.maximum(den, 1e-300), 0.0, vmax)
        if not np.all(np.isfinite(va_new)):
            raise FloatingPointError("non-finite WMMSE iterate")
        delta = np.abs(va_new - va).max(axis=1)
        u[active], w[active], v[active] = ua, wa, va_new
        if want_trace:
            trace.append(_wmmse_surrogate(h, hsq, hdiag, u, w, v))
        still = delta >= tol
        active[active.nonzero()[0][~still]] = False

    powers = v ** 2
    powers[v == vmax] = p_max       # exact cap when the amplitude sits at the box edge
    return powers, trace


def _wmmse_surrogate(h, hsq, hdiag, u, w, v):
    """Weighted sum-MSE surrogate sum_i (w_i e_i - log w_i) per row."""
    total = 1.0 + np.einsum("nji,nj->ni", hsq, v ** 2)
    e = u ** 2 * total - 2.0 * u * hdiag * v + 1.0
    return (w * e - np.log(w)).sum(axis=1)


def naive_wmmse_team(observations, p_max: float, max_iter: int = 200,
                     tol: float = 1e-6) -> np.ndarray:
    """Each agent solves WMMSE on its own noisy CSI as if exact and keeps its
    own component; the stacked result need not be mutually consistent."""
    k = len(observations)
    powers = np.empty(k)
    for i, obs in enumerate(observations):
        powers[i] = wmmse_powers(obs.csi, p_max, max_iter, tol)[i]
    return powers


def naive_wmmse_team_batch(csi: np.ndarray, p_max: float, max_iter: int = 200,
                           tol: float = 1e-6) -> np.ndarray:
    """Batch form over (n, K, K, K) per-agent CSI stacks; returns (n, K)."""
    n, k = csi.shape[0], csi.shape[1]
    powers = np.empty((n, k))
    for i in range(k):
        powers[:, i] = wmmse_powers_batch(csi[:, i], p_max, max_iter, tol)[:, i]
    return powers


# --- non-learned baselines ----------------------------------------------------

def tdma_powers(k: int, slot_index: int, p_max: float) -> np.ndarray:
    """Round-robin single-transmitter schedule: TX (slot mod k) at full power."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if slot_index < 0:
        raise ValueError(f"slot_index must be >= 0, got {slot_index}")
    p = np.zeros(k)
    p[slot_index % k] = p_max
    return p


def tdma_genie_powers(g: np.ndarray, p_max: float) -> np.ndarray:
    """Genie TDMA variant: activates the largest true direct gain."""
    g = np.asarray(g, dtype=np.float64)
    p = np.zeros(g.shape[0])
    p[int(np.argmax(np.diag(g)))] = p_max
    return p


def _candidate_grid(k: int, p_max: float, grid_points: int) -> np.ndarray:
    levels = np.linspace(0.0, p_max, grid_points)
    mesh = np.meshgrid(*([levels] * k), indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)   # lexicographic order
    binaries = np.array(list(itertools.product([0.0, p_max], repeat=k)))
    return np.concatenate([grid, binaries], axis=0)


def _candidate_rates(g: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """Rates of every candidate power vector for every channel: (n, c)."""
    direct = np.einsum("nii->ni", g)                     # (n, k)
    rx = np.einsum("nji,cj->nci", g, cands)              # (n, c, k)
    interference = 1.0 + rx - direct[:, None, :] * cands[None, :, :]
    sinr = direct[:, None, :] * cands[None, :, :] / interference
    return np.log1p(sinr).sum(axis=2) / np.log(2.0)


def perfect_csi_oracle(g: np.ndarray, p_max: float, grid_points: int = 101) -> np.ndarray:
    """Exhaustive grid search over {0..p_max}^K plus all binary vectors.

    Returns the best power vector on the true channel; exact rate ties go to
    the lexicographically smallest vector. Supported for K <= 3 only.
    """
    g = np.asarray(g, dtype=np.float64)
    k = g.shape[0]
    if k > 3:
        raise ValueError(f"grid oracle supports K <= 3, got K={k}")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    cands = _candidate_grid(k, p_max, grid_points)
    rates = _candidate_rates(g[None], cands)[0]
    # candidates are lexicographically ascending with binaries appended as exact
    # duplicates of grid points, so first-max is the lexicographically smallest tie
    return cands[int(np.argmax(rates))].copy()


def perfect_csi_oracle_batch(g: np.ndarray, p_max: float, grid_points: int = 101,
                             chunk: int = 1024) -> np.ndarray:
    """Vectorized oracle over (n, K, K) channels; returns (n, K) powers."""
    g = np.asarray(g, dtype=np.float64)
    n, k = g.shape[0], g.shape[1]
    if k > 3:
        raise ValueError(f"grid oracle supports K <= 3, got K={k}")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    cands = _candidate_grid(k, p_max, grid_points)
    best_rate = np.full(n, -np.inf)
    best_idx = np.zeros(n, dtype=np.int64)
    for lo in range(0, cands.shape[0], chunk):
        part = cands[lo:lo + chunk]
        rates = _candidate_rates(g, part)
        idx = np.argmax(rates, axis=1)
        val = rates[np.arange(n), idx]
        better = val > best_rate                        # strict: ties keep earlier index
        best_rate[better] = val[better]
        best_idx[better] = idx[better] + lo
    return cands[best_idx]


# --- team (de)serialization ----------------------------------------------------

def team_to_dict(policies) -> dict:
    """Manifest plus per-agent parameter blobs for a homogeneous policy team."""
    if not policies:
        raise ValueError("empty policy team")
    first = policies[0]
    doc = {
        "format": _TEAM_FORMAT,
        "version": _TEAM_VERSION,
        "k": first.k,
        "p_max": first.p_max,
        "input_layout": INPUT_LAYOUT_VERSION,
    }
    if isinstance(first, DmoePolicy):
        doc["kind"] = "dmoe"
        doc["n_e"] = first.n_e
        doc["agents"] = [
            {"experts": [net.mlp_to_dict(e) for e in p.experts],
             "gating": net.mlp_to_dict(p.gating)}
            for p in policies
        ]
    elif isinstance(first, TeamDnnPolicy):
        doc["kind"] = "teamdnn"
        doc["agents"] = [{"net": net.mlp_to_dict(p.net)} for p in policies]
    else:
        raise ValueError(f"unsupported policy type {type(first).__name__}")
    return doc


def team_from_dict(doc: dict) -> list:
    if doc.get("format") != _TEAM_FORMAT:
        raise ValueError(f"not a {_TEAM_FORMAT} document")
    if doc.get("version") != _TEAM_VERSION:
        raise ValueError(f"unsupported team format version {doc.get('version')!r}")
    if doc.get("input_layout") != INPUT_LAYOUT_VERSION:
        raise ValueError(f"unsupported input layout {doc.get('input_layout')!r}")
    k, p_max = int(doc["k"]), float(doc["p_max"])
    if doc["kind"] == "dmoe":
        n_e = int(doc["n_e"])
        return [
            DmoePolicy(experts=tuple(net.mlp_from_dict(e) for e in a["experts"]),
                       gating=net.mlp_from_dict(a["gating"]),
                       p_max=p_max, n_e=n_e, k=k)
            for a in doc["agents"]
        ]
    if doc["kind"] == "teamdnn":
        return [TeamDnnPolicy(net=net.mlp_from_dict(a["net"]), p_max=p_max, k=k)
                for a in doc["agents"]]
    raise ValueError(f"unknown policy kind {doc['kind']!r}")


def save_team(policies, path) -> None:
    with open(path, "w") as f:
        f.write(json.dumps(team_to_dict(policies), sort_keys=True, separators=(",", ":")))


def load_team(path) -> list:
    with open(path) as f:
        return team_from_dict(json.load(f))
