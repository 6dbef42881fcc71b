"""Complex linear-algebra substrate: unitary DFTs, 2D circular convolution,
Hermitian Toeplitz construction and seeded complex Gaussian sampling.

All DFTs in this package are unitary with kernel exp(-2i*pi*j*k/n). The
matrices this convention produces are symmetric (F^T = F), so the adjoint
equals the elementwise conjugate.
"""

import numpy as np

__all__ = [
    "dft_matrix",
    "circ_conv2",
    "flip_kernel",
    "hermitian_toeplitz",
    "softmax",
    "complex_normal",
    "psd_factor",
    "sample_complex_gaussian",
]


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n x n DFT matrix, F[j, k] = exp(-2i*pi*j*k/n) / sqrt(n)."""
    if n < 1:
        raise ValueError(f"DFT size must be >= 1, got {n}")
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def _grid(vec: np.ndarray, s: int, u: int) -> np.ndarray:
    """View a length s*u vector (index k = col*s + row) as a (u, s) array.

    Row-major reshape to (u, s) matches the column-major s x u matrix
    layout used for vectorized channels, so no transpose is needed.
    """
    vec = np.asarray(vec)
    if vec.shape[-1] != s * u:
        raise ValueError(f"expected last axis of length {s * u}, got {vec.shape[-1]}")
    return vec.reshape(vec.shape[:-1] + (u, s))


def circ_conv2(kernel: np.ndarray, vec: np.ndarray, s: int, u: int) -> np.ndarray:
    """2D circular convolution of two vectorized s x u grids, via FFT.

    Both arguments are reshaped to grids with s entries per column, circularly
    convolved in 2D, and the result is vectorized again. Cost O(su log su).
    Supports batches on leading axes of either argument (broadcasting).
    """
    kg = np.fft.fft2(_grid(np.asarray(kernel, dtype=float), s, u))
    vg = np.fft.fft2(_grid(np.asarray(vec, dtype=float), s, u))
    out = np.fft.ifft2(kg * vg).real
    return out.reshape(out.shape[:-2] + (s * u,))


def flip_kernel(vec: np.ndarray, s: int, u: int) -> np.ndarray:
    """Circularly reversed kernel: grid index (row, col) -> (-row mod s, -col mod u).

    This is the unique reordering for which correlation with the original
    kernel becomes circular convolution with the flipped one.
    """
    g = _grid(np.asarray(vec), s, u)
    rows = ((-np.arange(u)) % u)[:, None]
    cols = ((-np.arange(s)) % s)[None, :]
    return g[..., rows, cols].reshape(vec.shape)


def hermitian_toeplitz(first_col: np.ndarray) -> np.ndarray:
    """Hermitian Toeplitz matrix from its first column.

    T[m, n] = c[m - n] for m >= n and conj(c[n - m]) above the diagonal.
    c[0] must be real (it is the common diagonal entry).
    """
    c = np.asarray(first_col, dtype=complex).ravel()
    if not np.all(np.isfinite(c.view(float))):
        raise ValueError("first column contains non-finite entries")
    if abs(c[0].imag) > 1e-12 * max(1.0, abs(c[0].real)):
        raise ValueError(f"diagonal entry must be real, got {c[0]}")
    c = c.copy()
    c[0] = c[0].real
    n = c.size
    idx = np.subtract.outer(np.arange(n), np.arange(n))
    t = np.where(idx >= 0, c[np.abs(idx)], np.conj(c[np.abs(idx)]))
    return t


def softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically safe softmax; scores can span hundreds of units."""
    scores = np.asarray(scores, dtype=float)
    e = np.exp(scores - scores.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian: unit variance per entry,
    real and imaginary parts i.i.d. N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def psd_factor(cov: np.ndarray, rel_floor: float = 1e-12) -> np.ndarray:
    """Factor L with L L^H = cov for a Hermitian PSD matrix.

    Eigenvalues below rel_floor * max(eigenvalue) are floored to zero, so
    near-rank-deficient covariances (tiny angular spread) factor cleanly.
    Raises if cov is not square or not Hermitian to 1e-10.
    """
    cov = np.asarray(cov)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    scale = max(1.0, float(np.abs(cov).max(initial=0.0)))
    if np.abs(cov - cov.conj().T).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("covariance is not Hermitian")
    lam, vec = np.linalg.eigh(cov)
    floor = rel_floor * max(lam.max(initial=0.0), 0.0)
    lam = np.where(lam > floor, lam, 0.0)
    return vec * np.sqrt(lam)


def sample_complex_gaussian(cov: np.ndarray, rng: np.random.Generator,
                            size: int | None = None) -> np.ndarray:
    """Draw from the zero-mean complex Gaussian with the given covariance.

    Returns shape (n,) for size=None, else (size, n).
    """
    factor = psd_factor(cov)
    n = factor.shape[0]
    g = complex_normal(rng, (n,) if size is None else (size, n))
    return g @ factor.T if size is not None else factor @ g
