"""Channel estimators: conditional MMSE with known covariance (genie), the
gridded estimator (GE), the FFT-based fast estimator (FE), and the baselines
(structured-covariance ML, least squares, genie-aided OMP).

The GE supports two filter constructions:
  * "exact":     per-grid-point MMSE filters for the true Toeplitz-Kronecker
                 covariance, stored densely; the reference construction.
  * "circulant": filters for the circulant surrogate of each covariance.
                 These factor exactly through the spectral transform, so they
                 admit a packed matrix-free form whose per-observation cost
                 is O(S*U^2*P) instead of O(S^2*U^2*P).
Both paths of the "circulant" construction (packed and dense) produce
identical estimates; the packed one is the fast production path.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelCovariance, ClusterParams, channel_covariance
from .numerics import softmax, circ_conv2, flip_kernel
from .structure import (
    apply_block_filter,
    apply_diag_filter,
    diag_blocks_expand,
    fe_input,
    ge_input,
)

DET_PHASE_TOL = 1e-6


def genie_mmse(y: np.ndarray, cov: ChannelCovariance, pilots, sigma2: float) -> np.ndarray:
    """Conditional MMSE estimate with known channel covariance:
    C X^H (X C X^H + sigma^2 I)^{-1} y, via a Hermitian solve."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    x = pilots.x_lifted
    cxh = cov.full @ x.conj().T
    m = x @ cxh + sigma2 * np.eye(x.shape[0])
    return cxh @ np.linalg.solve(m, y)


def side_spectral_eigenvalues(cov_side: np.ndarray) -> np.ndarray:
    """diag(F C F^H) for Hermitian Toeplitz C, in O(n log n).

    These are the eigenvalues of the best circulant approximation of C in
    Frobenius norm; nonnegative because C is PSD (clipped against roundoff).
    """
    c = np.asarray(cov_side)[:, 0]
    n = c.size
    a = c * (n - np.arange(n)) / n
    diag = 2.0 * np.real(np.fft.fft(a)) - c[0].real
    return np.maximum(diag, 0.0)


def spectral_eigenvalues(cov: ChannelCovariance) -> np.ndarray:
    """Circulant-surrogate eigenvalues of the full covariance: the Kronecker
    product of the per-side spectral diagonals (length S*U, entry u*S+s)."""
    return np.kron(side_spectral_eigenvalues(cov.cov_tx),
                   side_spectral_eigenvalues(cov.cov_rx))


def spectral_filter_weights(c: np.ndarray, ratio: float, sigma2: float) -> np.ndarray:
    """Wiener weights in the spectral domain: c / (ratio * c + sigma^2),
    with ratio = N/U for orthogonal pilots. Well-defined for c = 0."""
    return c / (ratio * c + sigma2)


def _real_log_det(mat: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(mat)
    if abs(sign - 1.0) > DET_PHASE_TOL:
        raise ArithmeticError(f"expected a real positive determinant, sign={sign}")
    return float(logdet)


def _pilot_spectral_gram(pilots, qt) -> np.ndarray:
    """The common U x U block of Q X^H X Q^H grouped by diagonal position:
    F_U conj(X' X'^H) F_U^H."""
    from .numerics import dft_matrix
    fu = dft_matrix(qt.U)
    return fu @ np.conj(pilots.x_small @ pilots.x_small.conj().T) @ fu.conj().T


def _structured_filter_blocks(c: np.ndarray, gram_u: np.ndarray, sigma2: float,
                              s: int, u: int) -> np.ndarray:
    """Per-diagonal-position U x U filter blocks for a spectral-diagonal
    covariance surrogate, shape (s, u, u).

    Uses sigma^-2 D^{1/2} (sigma^-2 D^{1/2} G D^{1/2} + I)^{-1} D^{1/2},
    which stays well-posed when eigenvalues hit zero.
    """
    roots = np.sqrt(c.reshape(u, s).T)                     # (s, u)
    scaled = roots[:, :, None] * gram_u[None, :, :] * roots[:, None, :] / sigma2
    inv = np.linalg.inv(scaled + np.eye(u)[None])
    return roots[:, :, None] * inv * roots[:, None, :] / sigma2


def _blocks_to_packed(blocks: np.ndarray, s: int, u: int) -> np.ndarray:
    """(s, u, u) filter blocks -> packed block-diagonal vector of length s*u^2."""
    return np.transpose(blocks, (1, 2, 0)).reshape(-1)


def _structured_log_det(blocks: np.ndarray, gram_u: np.ndarray, u: int) -> float:
    eye = np.eye(u)[None]
    signs, logdets = np.linalg.slogdet(eye - blocks @ gram_u[None])
    total_sign = np.prod(signs)
    if abs(total_sign - 1.0) > DET_PHASE_TOL:
        raise ArithmeticError(f"expected a real positive determinant, sign={total_sign}")
    return float(logdets.sum())


@dataclass
class GridFilters:
    """Precomputed per-grid-point filters plus their log-det biases.

    mode "dense":   filters has shape (P, S*U, S*N), one dense filter per point.
    mode "orth":    filters has shape (S*U, P); column i is the real spectral
                    diagonal of filter i (orthogonal pilots).
    mode "general": filters has shape (S*U^2, P); column i packs the block
                    diagonals of filter i (arbitrary pilots).
    """

    mode: str
    S: int
    U: int
    sigma2: float
    filters: np.ndarray
    biases: np.ndarray
    deltas: list

    @property
    def P(self) -> int:
        return self.biases.size

    @classmethod
    def from_spectral_filters(cls, columns: np.ndarray, biases: np.ndarray,
                              S: int, U: int, sigma2: float) -> "GridFilters":
        """Grid from explicit spectral filter columns (orthogonal pilots)."""
        columns = np.asarray(columns, dtype=float)
        if columns.shape[0] != S * U:
            raise ValueError(f"columns must have {S * U} rows, got {columns.shape[0]}")
        return cls("orth", S, U, sigma2, columns, np.asarray(biases, dtype=float), [])


def _sin_grid(count: int) -> np.ndarray:
    """Midpoint-uniform grid in the sin-angle domain over [-1, 1)."""
    return -1.0 + (2.0 * np.arange(count) + 1.0) / count


def grid_cluster_params(P: int, U: int, spread_tx: float, spread_rx: float
                        ) -> list[ClusterParams]:
    """Single-cluster grid points on a sin-uniform (tx, rx) angle lattice.

    The tx side gets max(U, 4) points (fewer if P is small), the rx side the
    rest; P must factor accordingly.
    """
    if P < 1:
        raise ValueError("grid needs at least one point")
    p_tx = min(max(U, 4), P)
    while P % p_tx:
        p_tx -= 1
    p_rx = P // p_tx
    angles_tx = np.arcsin(_sin_grid(p_tx))
    angles_rx = np.arcsin(_sin_grid(p_rx))
    return [
        ClusterParams([at], [ar], [1.0], spread_tx, spread_rx)
        for at in angles_tx
        for ar in angles_rx
    ]


def build_grid(S: int, U: int, pilots, qt, sigma2: float, P: int,
               spread_tx: float, spread_rx: float,
               filter_type: str = "exact", packed: bool | None = None) -> GridFilters:
    """Build the GE's filter bank over a sin-uniform single-cluster grid.

    filter_type "exact" stores dense MMSE filters for the true covariances;
    "circulant" uses the spectral surrogate, packed into a matrix unless
    packed=False requests dense materialization (for equivalence checks).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    deltas = grid_cluster_params(P, U, spread_tx, spread_rx)
    su = S * U
    ratio = pilots.N / U

    if filter_type == "exact":
        x = pilots.x_lifted
        filters = np.empty((len(deltas), su, x.shape[0]), dtype=complex)
        biases = np.empty(len(deltas))
        eye = np.eye(x.shape[0])
        for i, d in enumerate(deltas):
            cov = channel_covariance(d, S, U)
            cxh = cov.full @ x.conj().T
            m = x @ cxh + sigma2 * eye
            w = np.linalg.solve(m, cxh.conj().T).conj().T
            filters[i] = w
            biases[i] = _real_log_det(eye - x @ w)
        return GridFilters("dense", S, U, sigma2, filters, biases, deltas)

    if filter_type != "circulant":
        raise ValueError(f"unknown filter_type {filter_type!r}")

    if pilots.is_orthogonal:
        columns = np.empty((su, len(deltas)))
        biases = np.empty(len(deltas))
        for i, d in enumerate(deltas):
            c = spectral_eigenvalues(channel_covariance(d, S, U))
            columns[:, i] = spectral_filter_weights(c, ratio, sigma2)
            biases[i] = float(np.sum(np.log(sigma2 / (ratio * c + sigma2))))
        grid = GridFilters("orth", S, U, sigma2, columns, biases, deltas)
    else:
        gram_u = _pilot_spectral_gram(pilots, qt)
        columns = np.empty((S * U * U, len(deltas)), dtype=complex)
        biases = np.empty(len(deltas))
        for i, d in enumerate(deltas):
            c = spectral_eigenvalues(channel_covariance(d, S, U))
            blocks = _structured_filter_blocks(c, gram_u, sigma2, S, U)
            columns[:, i] = _blocks_to_packed(blocks, S, U)
            biases[i] = _structured_log_det(blocks, gram_u, U)
        grid = GridFilters("general", S, U, sigma2, columns, biases, deltas)

    if packed is False:
        q = qt.matrix()
        xh = pilots.x_lifted.conj().T
        filters = np.empty((grid.P, su, xh.shape[1]), dtype=complex)
        for i in range(grid.P):
            if grid.mode == "orth":
                mid = (grid.filters[:, i].astype(complex)[:, None]) * q
            else:
                mid = diag_blocks_expand(grid.filters[:, i], S, U) @ q
            filters[i] = q.conj().T @ mid @ xh
        return GridFilters("dense", S, U, sigma2, filters, grid.biases, deltas)
    return grid


def ge_estimate(y: np.ndarray, grid: GridFilters, pilots, sigma2: float,
                qt=None) -> np.ndarray:
    """Gridded estimate: softmax-weighted combination of the grid filters.

    The weights exponentiate the per-filter observation score plus log-det
    bias; scores are shifted by their maximum before exponentiation.
    """
    if grid.mode == "dense":
        u0 = pilots.apply_adjoint(y)
        v = grid.filters @ y                             # (P, S*U)
        scores = np.real(v @ np.conj(u0)) / sigma2 + grid.biases
        return softmax(scores) @ v
    if qt is None:
        raise ValueError("packed grids need the spectral transform")
    if grid.mode == "orth":
        chat = fe_input(y, pilots, qt, sigma2)
        scores = grid.filters.T @ chat + grid.biases
        w = grid.filters @ softmax(scores)
        return apply_diag_filter(w, y, pilots, qt)
    # general: block entries pair with the conjugated input entries
    cbar = ge_input(y, pilots, qt, sigma2)
    scores = np.real(grid.filters.T @ np.conj(cbar)) + grid.biases
    w = grid.filters @ softmax(scores)
    return apply_block_filter(w, y, pilots, qt)


@dataclass
class FeParams:
    """Fast-estimator parameters: a real spectral kernel and a scalar bias
    shared by all grid positions (the shift family makes the biases equal)."""

    w0: np.ndarray
    b0: float

    def __post_init__(self):
        self.w0 = np.asarray(self.w0, dtype=float)
        if not (np.all(np.isfinite(self.w0)) and np.isfinite(self.b0)):
            raise ValueError("fast-estimator parameters must be finite")


def fe_reference_params(S: int, U: int, pilots, qt, sigma2: float,
                        spread_tx: float, spread_rx: float) -> FeParams:
    """Kernel and bias derived from the broadside single-cluster covariance;
    the implicit grid is the family of its 2D circular shifts."""
    if not pilots.is_orthogonal:
        raise ValueError("the fast estimator requires orthogonal pilots")
    ref = ClusterParams([0.0], [0.0], [1.0], spread_tx, spread_rx)
    c = spectral_eigenvalues(channel_covariance(ref, S, U))
    ratio = pilots.N / U
    w0 = spectral_filter_weights(c, ratio, sigma2)
    b0 = float(np.sum(np.log(sigma2 / (ratio * c + sigma2))))
    return FeParams(w0, b0)


def fe_estimate(y: np.ndarray, fe: FeParams, pilots, qt, sigma2: float) -> np.ndarray:
    """Fast estimate: two 2D circular convolutions around a softmax, then a
    diagonal spectral filter; total cost O(SU log SU)."""
    if not pilots.is_orthogonal:
        raise ValueError("the fast estimator requires orthogonal pilots; "
                         "use the gridded estimator for general pilots")
    s, u = qt.S, qt.U
    chat = fe_input(y, pilots, qt, sigma2)
    hidden = softmax(circ_conv2(flip_kernel(fe.w0, s, u), chat, s, u) + fe.b0)
    w = circ_conv2(fe.w0, hidden, s, u)
    return apply_diag_filter(w, y, pilots, qt)


def ml_estimate(y: np.ndarray, pilots, qt, sigma2: float) -> np.ndarray:
    """Structured-covariance maximum-likelihood baseline: spectral eigenvalue
    estimates [|t|^2 - sigma^2]_+ plugged into the diagonal Wiener filter."""
    if not pilots.is_orthogonal:
        raise ValueError("the ML baseline requires orthogonal pilots")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    t = qt.forward(pilots.apply_adjoint(y))
    c = np.maximum(np.abs(t) ** 2 - sigma2, 0.0)
    w = c / ((pilots.N / pilots.U) * c + sigma2)
    return qt.adjoint(w * t)


def ls_estimate(y: np.ndarray, pilots) -> np.ndarray:
    """Least-squares estimate; the orthogonal-pilot closed form is
    (U/N) X^H y, otherwise the minimum-norm solution of the lifted system."""
    if pilots.is_orthogonal:
        return (pilots.U / pilots.N) * pilots.apply_adjoint(y)
    x = pilots.x_lifted
    sol, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
    if rank < x.shape[1]:
        warnings.warn(f"rank-deficient pilot matrix (rank {rank} < {x.shape[1]}); "
                      "returning the minimum-norm solution", RuntimeWarning)
    return sol


def omp_dictionary(S: int, oversampling: int) -> np.ndarray:
    """Oversampled DFT dictionary with unit-norm columns, shape (S, oversampling*S)."""
    m = oversampling * S
    return np.exp(-2j * np.pi * np.outer(np.arange(S), np.arange(m)) / m) / np.sqrt(S)


def omp_genie(y: np.ndarray, h_true: np.ndarray, pilots,
              oversampling: int = 4, k_max: int | None = None) -> np.ndarray:
    """Orthogonal matching pursuit over the lifted oversampled-DFT dictionary,
    with the sparsity level picked against the true channel (upper bound).

    Runs greedy selection with a least-squares refit over the active set at
    every step and returns the reconstruction closest to h_true.
    """
    S, U = pilots.S, pilots.U
    if k_max is None:
        k_max = 2 * U
    k_max = max(1, min(k_max, S * pilots.N))
    dictionary = np.kron(np.eye(U), omp_dictionary(S, oversampling))
    sensing = pilots.apply(dictionary.T).T               # (S*N, atoms)
    norms = np.linalg.norm(sensing, axis=0)
    norms[norms == 0] = 1.0

    residual = y
    active: list[int] = []
    best = np.zeros(S * U, dtype=complex)
    best_err = np.linalg.norm(h_true)
    for _ in range(k_max):
        corr = np.abs(sensing.conj().T @ residual) / norms
        corr[active] = -1.0
        active.append(int(np.argmax(corr)))
        coef, *_ = np.linalg.lstsq(sensing[:, active], y, rcond=None)
        residual = y - sensing[:, active] @ coef
        h_k = dictionary[:, active] @ coef
        err = np.linalg.norm(h_true - h_k)
        if err < best_err:
            best, best_err = h_k, err
    return best
