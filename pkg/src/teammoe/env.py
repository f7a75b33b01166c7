"""Channel, CSI-corruption and feedback-quality sampling for the K-user interference channel.

Conventions used throughout the package:
  * gain matrices are K x K with entry (j, i) the power gain from TX j to RX i,
    so diagonal entries are the direct gains;
  * gains are squared Rayleigh envelopes, i.e. chi-squared with 2 degrees of
    freedom scaled to unit mean (dof/scale overridable per call);
  * a quality coefficient gamma_i in [0, 1] blends true gains with independent
    noise, gamma_i = 1 meaning perfect CSI at TX i;
  * every sampler is a pure function of (arguments, generator state), so
    replaying a seed reproduces outputs bit-exactly.
"""

from dataclasses import dataclass

import numpy as np

GAIN_DOF = 2.0
GAIN_SCALE = 0.5


@dataclass(frozen=True)
class Observation:
    """What one transmitter sees: its noisy CSI and the shared quality estimate."""

    csi: np.ndarray             # (K, K) noisy gain matrix
    quality_estimate: np.ndarray  # (K,) shared noisy estimate of the quality vector


@dataclass(frozen=True)
class Sample:
    """One world draw: true channel, per-agent observations, true quality vector."""

    true_channel: np.ndarray          # (K, K)
    observations: tuple               # K Observations, all sharing quality_estimate
    quality: np.ndarray               # (K,) ground-truth gammas, kept for analysis


@dataclass(frozen=True)
class SampleBatch:
    """Struct-of-arrays form of n Samples, used on all hot paths.

    ``csi[m, i]`` is agent i's noisy gain matrix for sample m; ``quality_estimate``
    is shared by all agents of a sample.
    """

    true_channel: np.ndarray      # (n, K, K)
    csi: np.ndarray               # (n, K, K, K)
    quality_estimate: np.ndarray  # (n, K)
    quality: np.ndarray           # (n, K)

    @property
    def n(self) -> int:
        return self.true_channel.shape[0]

    @property
    def k(self) -> int:
        return self.true_channel.shape[1]


def validate_channel(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
        raise ValueError(f"channel matrix must be square with side >= 1, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("channel matrix entries must be finite")
    if np.any(g < 0):
        raise ValueError("channel matrix entries must be nonnegative")
    return g


def validate_quality(gamma: np.ndarray) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 1 or gamma.size < 1:
        raise ValueError(f"quality vector must be 1-D and nonempty, got shape {gamma.shape}")
    if np.any(gamma < 0) or np.any(gamma > 1):
        raise ValueError("quality coefficients must lie in [0, 1]")
    return gamma


def sample_gains(rng: np.random.Generator, shape, dof: float = GAIN_DOF,
                 scale: float = GAIN_SCALE) -> np.ndarray:
    """i.i.d. nonnegative power gains: scaled chi-squared entries."""
    return scale * rng.chisquare(dof, size=shape)


def sample_channel(rng: np.random.Generator, k: int, dof: float = GAIN_DOF,
                   scale: float = GAIN_SCALE) -> np.ndarray:
    """Draw one k x k gain matrix with i.i.d. unit-mean entries (at default dof/scale)."""
    if k < 1:
        raise ValueError("channel dimension k must be >= 1")
    return sample_gains(rng, (k, k), dof, scale)


def corrupt_csi(g: np.ndarray, gamma_i: float, rng: np.random.Generator,
                dof: float = GAIN_DOF, scale: float = GAIN_SCALE) -> np.ndarray:
    """Blend the true channel with an independent draw from the same gain law.

    Returns gamma_i * G + sqrt(1 - gamma_i^2) * Delta elementwise. The Delta
    draw happens for every gamma_i, so the generator advances identically no
    matter the blend weight; gamma_i = 1 returns G exactly.
    """
    g = validate_channel(g)
    if not 0.0 <= gamma_i <= 1.0:
        raise ValueError(f"gamma_i must lie in [0, 1], got {gamma_i}")
    delta = sample_gains(rng, g.shape, dof, scale)
    return gamma_i * g + np.sqrt(1.0 - gamma_i ** 2) * delta


def estimate_quality(gamma: np.ndarray, sigma_n: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Noisy quality estimate: gamma plus i.i.d. Gaussian noise of std sigma_n.

    No clipping: out-of-[0,1] values are passed through so policies face the
    same imperfect estimates they will see at run time. The Gaussian draw
    happens even for sigma_n = 0 to keep generator consumption identical
    across noise levels (common random numbers in sweeps).
    """
    gamma = validate_quality(gamma)
    if sigma_n < 0:
        raise ValueError(f"sigma_n must be >= 0, got {sigma_n}")
    return gamma + sigma_n * rng.standard_normal(gamma.shape)


def sample_quality_uniform(rng: np.random.Generator, k: int) -> np.ndarray:
    """Quality vector with i.i.d. components uniform on [0, 1]."""
    if k < 1:
        raise ValueError("quality dimension k must be >= 1")
    return rng.uniform(0.0, 1.0, size=k)


def sample_batch_arrays(gamma: np.ndarray, sigma_n: float, n: int,
                        rng: np.random.Generator, dof: float = GAIN_DOF,
                        scale: float = GAIN_SCALE) -> SampleBatch:
    """Draw n independent samples at a fixed quality vector, as arrays.

    Draw order is fixed (channels, then per-agent corruption noise, then
    quality-estimate noise) so a given seed always produces the same batch.
    """
    gamma = validate_quality(gamma)
    if n < 1:
        raise ValueError("batch size n must be >= 1")
    if sigma_n < 0:
        raise ValueError(f"sigma_n must be >= 0, got {sigma_n}")
    k = gamma.size
    gamma_rows = np.broadcast_to(gamma, (n, k)).copy()
    return _assemble_batch(gamma_rows, sigma_n, n, k, rng, dof, scale)


def sample_mixed_quality_batch(k: int, sigma_n: float, n: int,
                               rng: np.random.Generator, dof: float = GAIN_DOF,
                               scale: float = GAIN_SCALE) -> SampleBatch:
    """Draw n samples with per-sample quality vectors uniform on [0, 1]^k.

    This is the training-set construction for quality-adaptive policies: the
    quality prior is uniform, and each sample carries its own noisy estimate.
    """
    if k < 1:
        raise ValueError("quality dimension k must be >= 1")
    if n < 1:
        raise ValueError("batch size n must be >= 1")
    if sigma_n < 0:
        raise ValueError(f"sigma_n must be >= 0, got {sigma_n}")
    gamma_rows = rng.uniform(0.0, 1.0, size=(n, k))
    return _assemble_batch(gamma_rows, sigma_n, n, k, rng, dof, scale)


def _assemble_batch(gamma_rows: np.ndarray, sigma_n: float, n: int, k: int,
                    rng: np.random.Generator, dof: float, scale: float) -> SampleBatch:
    g = sample_gains(rng, (n, k, k), dof, scale)
    delta = sample_gains(rng, (n, k, k, k), dof, scale)
    z = rng.standard_normal((n, k))
    blend = gamma_rows[:, :, None, None]                      # (n, k_agents, 1, 1)
    csi = blend * g[:, None, :, :] + np.sqrt(1.0 - blend ** 2) * delta
    quality_estimate = gamma_rows + sigma_n * z
    return SampleBatch(true_channel=g, csi=csi,
                       quality_estimate=quality_estimate, quality=gamma_rows)


def sample_batch(gamma: np.ndarray, sigma_n: float, n: int,
                 rng: np.random.Generator, dof: float = GAIN_DOF,
                 scale: float = GAIN_SCALE) -> list:
    """Draw n independent Samples at a fixed quality vector.

    Thin wrapper over :func:`sample_batch_arrays`, so both entry points share
    one draw order and agree bit-exactly under the same seed.
    """
    batch = sample_batch_arrays(gamma, sigma_n, n, rng, dof, scale)
    return batch_to_samples(batch)


def batch_to_samples(batch: SampleBatch) -> list:
    """Expand a SampleBatch into a list of Sample objects."""
    out = []
    for m in range(batch.n):
        obs = tuple(
            Observation(csi=batch.csi[m, i], quality_estimate=batch.quality_estimate[m])
            for i in range(batch.k)
        )
        out.append(Sample(true_channel=batch.true_channel[m], observations=obs,
                          quality=batch.quality[m]))
    return out


def slice_batch(batch: SampleBatch, idx) -> SampleBatch:
    """Row-select a SampleBatch (fancy indexing copies)."""
    return SampleBatch(true_channel=batch.true_channel[idx], csi=batch.csi[idx],
                       quality_estimate=batch.quality_estimate[idx],
                       quality=batch.quality[idx])


def substream(seed: int, *tags: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *tags).

    Streams with distinct tags are statistically independent, so pipelines can
    share channel draws across configurations by reusing the same key.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]))
