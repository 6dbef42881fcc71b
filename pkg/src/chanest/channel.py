"""Spatial channel model: cluster priors, Laplace angular power densities,
Toeplitz side covariances, Kronecker channel covariance, SNR-calibrated noise.

Conventions, fixed package-wide:
  * uplink with a ULA on both ends; the receive side has S antennas and the
    transmit side U antennas,
  * the channel matrix is S x U and gets vectorized column-major, so the
    full covariance is cov_tx kron cov_rx,
  * angular power densities integrate to one, hence every side covariance
    has unit diagonal and the full covariance has trace S*U.
"""

import json
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from .numerics import complex_normal, hermitian_toeplitz, sample_complex_gaussian

QUAD_POINTS = 4096


@dataclass(frozen=True)
class ClusterParams:
    """Per-realization propagation parameters: one Laplace component per cluster."""

    angles_tx: np.ndarray  # radians, shape (num_clusters,)
    angles_rx: np.ndarray
    gains: np.ndarray      # nonnegative, sums to 1
    spread_tx: float       # radians
    spread_rx: float

    def __post_init__(self):
        for name in ("angles_tx", "angles_rx", "gains"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if abs(self.gains.sum() - 1.0) > 1e-9:
            raise ValueError(f"gains must sum to 1, got {self.gains.sum()}")
        if self.spread_tx <= 0 or self.spread_rx <= 0:
            raise ValueError("angular spreads must be positive")
        for angles in (self.angles_tx, self.angles_rx):
            if np.any(np.abs(angles) > np.pi / 2 + 1e-12):
                raise ValueError("cluster angles must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class ChannelCovariance:
    cov_tx: np.ndarray   # U x U Hermitian Toeplitz
    cov_rx: np.ndarray   # S x S Hermitian Toeplitz
    full: np.ndarray     # (S*U) x (S*U), cov_tx kron cov_rx


@dataclass
class ScenarioConfig:
    """Experiment knobs. spread_tx_deg applies to the U-antenna transmit side,
    spread_rx_deg to the S-antenna receive side."""

    S: int
    U: int
    N: int
    num_clusters: int = 1
    spread_tx_deg: float = 35.0
    spread_rx_deg: float = 2.0
    snr_db: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if min(self.S, self.U, self.N) < 1:
            raise ValueError("S, U and N must all be >= 1")
        if self.num_clusters < 1:
            raise ValueError("num_clusters must be >= 1")

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2)
            f.write("\n")

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls(**json.load(f))


def sample_cluster_params(cfg: ScenarioConfig, rng: np.random.Generator) -> ClusterParams:
    """Draw cluster angles uniformly on [-pi/2, pi/2] and normalized gains."""
    k = cfg.num_clusters
    angles_tx = rng.uniform(-np.pi / 2, np.pi / 2, k)
    angles_rx = rng.uniform(-np.pi / 2, np.pi / 2, k)
    gains = 1.0 - rng.random(k)  # uniform on (0, 1]
    gains = gains / gains.sum()
    return ClusterParams(angles_tx, angles_rx, gains,
                         np.deg2rad(cfg.spread_tx_deg), np.deg2rad(cfg.spread_rx_deg))


def steering_vector(theta: float, n: int) -> np.ndarray:
    """ULA response for half-wavelength spacing: entry k = exp(-1j*k*pi*sin(theta))."""
    return np.exp(-1j * np.pi * np.sin(theta) * np.arange(n))


@lru_cache(maxsize=16)
def _quad_nodes(num_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite-trapezoid nodes and weights on [-pi, pi]."""
    theta = np.linspace(-np.pi, np.pi, num_points)
    w = np.full(num_points, theta[1] - theta[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return theta, w


@lru_cache(maxsize=32)
def _phase_table(n: int, num_points: int) -> np.ndarray:
    """exp(-1j*pi*k*sin(theta)) on the quadrature grid, shape (num_points, n)."""
    theta, _ = _quad_nodes(num_points)
    return np.exp(-1j * np.pi * np.outer(np.sin(theta), np.arange(n)))


def _laplace_weights(angles: np.ndarray, spread: float, num_points: int) -> np.ndarray:
    """Quadrature weights of Laplace densities centered at `angles`, truncated
    to [-pi, pi] and renormalized to integrate to exactly one. Shape (k, num_points)."""
    theta, w = _quad_nodes(num_points)
    dens = np.exp(-np.sqrt(2.0) * np.abs(theta[None, :] - np.asarray(angles)[:, None]) / spread)
    dens *= w[None, :]
    return dens / dens.sum(axis=1, keepdims=True)


def covariance_first_column(angles, gains, spread: float, n: int,
                            num_points: int = QUAD_POINTS) -> np.ndarray:
    """First column of a side covariance: the angular power density's
    moments c[k] = integral of g(theta) * exp(-1j*pi*k*sin(theta))."""
    weights = _laplace_weights(np.atleast_1d(angles), spread, num_points)
    col = (np.asarray(gains).reshape(1, -1) @ (weights @ _phase_table(n, num_points))).ravel()
    if not np.all(np.isfinite(col.view(float))):
        raise ValueError("quadrature produced non-finite covariance entries")
    return col


def side_covariance(angles, gains, spread: float, n: int,
                    num_points: int = QUAD_POINTS) -> np.ndarray:
    """Hermitian Toeplitz side covariance with unit diagonal."""
    return hermitian_toeplitz(covariance_first_column(angles, gains, spread, n, num_points))


def channel_covariance(params: ClusterParams, S: int, U: int) -> ChannelCovariance:
    cov_tx = side_covariance(params.angles_tx, params.gains, params.spread_tx, U)
    cov_rx = side_covariance(params.angles_rx, params.gains, params.spread_rx, S)
    return ChannelCovariance(cov_tx, cov_rx, np.kron(cov_tx, cov_rx))


def noise_variance_for_snr(cov: ChannelCovariance, pilots, snr_db: float) -> float:
    """sigma^2 = trace(C X^H X) / (S * N * snr_linear)."""
    S = cov.cov_rx.shape[0]
    N = pilots.N
    xhx = pilots.gram
    trace = float(np.real(np.einsum("ij,ji->", cov.full, xhx)))
    return trace / (S * N * 10.0 ** (snr_db / 10.0))


def nominal_noise_variance(pilots, snr_db: float) -> float:
    """Noise variance for the given SNR under the unit-diagonal covariance
    normalization, independent of the realization: trace(X'X'^H)/(N*snr).
    Exact for every realization when the pilots are orthogonal."""
    power = float(np.real(np.trace(pilots.x_small @ pilots.x_small.conj().T)))
    return power / (pilots.N * 10.0 ** (snr_db / 10.0))


def sample_observation(cov: ChannelCovariance, pilots, sigma2: float,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw h from the channel prior and return (h, y) with y = X h + noise."""
    if sigma2 < 0:
        raise ValueError("noise variance must be nonnegative")
    h = sample_complex_gaussian(cov.full, rng)
    y = pilots.apply(h)
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * complex_normal(rng, y.shape)
    return h, y


@dataclass
class Draw:
    """One Monte-Carlo realization with everything the estimators may consume."""

    params: ClusterParams
    cov: ChannelCovariance
    sigma2: float
    h: np.ndarray
    y: np.ndarray


def _synthesize_draws(cfg: ScenarioConfig, pilots, angles_tx, angles_rx, gains,
                      sample_rngs, num_points: int = QUAD_POINTS) -> list[Draw]:
    """Vectorized covariance synthesis for a batch of cluster parameters,
    followed by one channel/noise draw per realization from its own rng."""
    S, U = cfg.S, cfg.U
    spread_tx = np.deg2rad(cfg.spread_tx_deg)
    spread_rx = np.deg2rad(cfg.spread_rx_deg)
    count = len(sample_rngs)

    wt_tx = _laplace_weights(angles_tx.ravel(), spread_tx, num_points)
    wt_rx = _laplace_weights(angles_rx.ravel(), spread_rx, num_points)
    cols_tx = (wt_tx @ _phase_table(U, num_points)).reshape(count, -1, U)
    cols_rx = (wt_rx @ _phase_table(S, num_points)).reshape(count, -1, S)
    col_tx = np.einsum("bk,bkn->bn", gains, cols_tx)
    col_rx = np.einsum("bk,bkn->bn", gains, cols_rx)

    snr_lin = 10.0 ** (cfg.snr_db / 10.0)
    draws = []
    for b in range(count):
        params = ClusterParams(angles_tx[b], angles_rx[b], gains[b], spread_tx, spread_rx)
        cov_tx = hermitian_toeplitz(col_tx[b])
        cov_rx = hermitian_toeplitz(col_rx[b])
        cov = ChannelCovariance(cov_tx, cov_rx, np.kron(cov_tx, cov_rx))
        trace = float(np.real(np.einsum("ij,ji->", cov.full, pilots.gram)))
        sigma2 = trace / (S * cfg.N * snr_lin)
        h, y = sample_observation(cov, pilots, sigma2, sample_rngs[b])
        draws.append(Draw(params, cov, sigma2, h, y))
    return draws


def draw_batch(cfg: ScenarioConfig, pilots, rng: np.random.Generator,
               count: int, num_points: int = QUAD_POINTS) -> list[Draw]:
    """Draw `count` independent realizations from one generator, each with
    fresh cluster parameters. Hot path for training (synthesis vectorized)."""
    k = cfg.num_clusters
    angles_tx = rng.uniform(-np.pi / 2, np.pi / 2, (count, k))
    angles_rx = rng.uniform(-np.pi / 2, np.pi / 2, (count, k))
    gains = 1.0 - rng.random((count, k))
    gains /= gains.sum(axis=1, keepdims=True)
    return _synthesize_draws(cfg, pilots, angles_tx, angles_rx, gains,
                             [rng] * count, num_points)


def draw_realizations(cfg: ScenarioConfig, pilots, rngs,
                      num_points: int = QUAD_POINTS) -> list[Draw]:
    """One realization per generator in `rngs`.

    Each draw consumes only its own generator (cluster parameters, then the
    channel, then the noise), so results do not depend on how a run chunks
    its draws; this is what makes hierarchically split seeds reproducible.
    """
    k = cfg.num_clusters
    angles_tx = np.stack([rng.uniform(-np.pi / 2, np.pi / 2, k) for rng in rngs])
    angles_rx = np.stack([rng.uniform(-np.pi / 2, np.pi / 2, k) for rng in rngs])
    gains = np.stack([1.0 - rng.random(k) for rng in rngs])
    gains /= gains.sum(axis=1, keepdims=True)
    return _synthesize_draws(cfg, pilots, angles_tx, angles_rx, gains,
                             list(rngs), num_points)
