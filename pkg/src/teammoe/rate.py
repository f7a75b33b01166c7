"""Sum-rate utility of the interference channel and its analytic power gradient.

Noise power is normalized to 1 and rates are in bits per channel use
(base-2 logarithms). With entry (j, i) of G the gain from TX j to RX i,

    R(G, p) = sum_i log2(1 + G[i,i] p_i / (1 + sum_{j != i} G[j,i] p_j)).
"""

import numpy as np

_LN2 = np.log(2.0)


def _check_pair(g: np.ndarray, p: np.ndarray):
    g = np.asarray(g, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"gain matrix must be square, got shape {g.shape}")
    if p.ndim != 1 or p.size != g.shape[0]:
        raise ValueError(f"power vector length {p.shape} does not match gain side {g.shape[0]}")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(p))):
        raise ValueError("gains and powers must be finite")
    if np.any(g < 0):
        raise ValueError("gains must be nonnegative")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    return g, p


def sum_rate(g: np.ndarray, p: np.ndarray) -> float:
    """Sum rate in bits per channel use; always >= 0."""
    g, p = _check_pair(g, p)
    return float(sum_rate_batch(g[None], p[None])[0])


def sum_rate_grad(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Analytic gradient dR/dp, length K.

    Component i carries the own-rate term G[i,i] / (1 + I_i + G[i,i] p_i)
    minus the interference it causes at every other receiver m,
    G[i,m] G[m,m] p_m / ((1 + I_m)(1 + I_m + G[m,m] p_m)), all divided by ln 2,
    with I_m = sum_{j != m} G[j,m] p_j.
    """
    g, p = _check_pair(g, p)
    return sum_rate_grad_batch(g[None], p[None])[0]


def sum_rate_batch(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Vectorized sum rate: g is (n, K, K), p is (n, K); returns (n,)."""
    direct = np.einsum("nii->ni", g)                       # (n, K) direct gains
    rx_power = np.einsum("nji,nj->ni", g, p)               # total power at each RX
    interference = 1.0 + rx_power - direct * p             # 1 + I_i
    return np.log1p(direct * p / interference).sum(axis=1) / _LN2


def sum_rate_grad_batch(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Vectorized dR/dp for g (n, K, K), p (n, K); returns (n, K)."""
    direct = np.einsum("nii->ni", g)
    rx_power = np.einsum("nji,nj->ni", g, p)
    denom_i = 1.0 + rx_power - direct * p                  # 1 + I_m
    denom_t = denom_i + direct * p                         # 1 + I_m + G_mm p_m
    own = direct / denom_t
    # leakage_i = sum_m G[i,m] * G[m,m] p_m / ((1+I_m)(1+I_m+G_mm p_m)), m != i;
    # the m = i term of the full sum uses G[i,i] and is subtracted back.
    weight = direct * p / (denom_i * denom_t)              # (n, K) per-receiver factor
    leak_all = np.einsum("nim,nm->ni", g, weight)
    leak = leak_all - direct * weight
    return (own - leak) / _LN2
