"""Structural operators behind the gridded and fast estimators.

The central sparsity pattern is a U x U grid of S x S all-diagonal blocks.
Such matrices form an algebra (closed under products and inverses): grouping
entries by diagonal position s turns one into S independent U x U matrices.
A length S*U^2 vector packs the block diagonals in row-major block order;
slot (a*U + b)*S + s holds diagonal entry s of block (a, b).
"""

import numpy as np

from .numerics import dft_matrix


def diag_blocks_expand(vec: np.ndarray, s: int, u: int) -> np.ndarray:
    """Vector of packed block diagonals -> the (s*u) x (s*u) sparse matrix."""
    vec = np.asarray(vec)
    if vec.shape != (s * u * u,):
        raise ValueError(f"expected vector of length {s * u * u}, got {vec.shape}")
    v3 = vec.reshape(u, u, s)
    out = np.zeros((s * u, s * u), dtype=v3.dtype)
    rows = np.arange(s)
    for a in range(u):
        for b in range(u):
            out[a * s + rows, b * s + rows] = v3[a, b]
    return out


def diag_blocks_extract(mat: np.ndarray, s: int, u: int) -> np.ndarray:
    """Block diagonals of a square matrix, packed; inverse of expand on its
    image, discards everything off the block diagonals otherwise."""
    mat = np.asarray(mat)
    if mat.shape != (s * u, s * u):
        raise ValueError(f"expected a {s * u} x {s * u} matrix, got {mat.shape}")
    m4 = mat.reshape(u, s, u, s)
    return np.einsum("asbs->abs", m4).reshape(-1)


def ge_input(y: np.ndarray, pilots, qt, sigma2: float) -> np.ndarray:
    """Estimator input for general pilots: the packed block diagonals of
    sigma^-2 * t t^H with t the spectral-domain matched filter output.

    Only the S*U^2 needed entries are formed, never the full outer product.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    t = qt.forward(pilots.apply_adjoint(y))
    t2 = t.reshape(qt.U, qt.S)
    out = np.einsum("as,bs->abs", t2, np.conj(t2)) / sigma2
    return out.reshape(-1)


def fe_input(y: np.ndarray, pilots, qt, sigma2: float) -> np.ndarray:
    """Estimator input for orthogonal pilots: sigma^-2 |Q X^H y|^2, real and
    nonnegative. Supports batches on leading axes."""
    if not pilots.is_orthogonal:
        raise ValueError("orthogonal pilots required; use ge_input instead")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    t = qt.forward(pilots.apply_adjoint(y))
    return (t.real ** 2 + t.imag ** 2) / sigma2


def apply_block_filter(w: np.ndarray, y: np.ndarray, pilots, qt) -> np.ndarray:
    """Matrix-free application of the structured filter defined by packed
    block diagonals w: adjoint pilots, spectral transform, O(S*U^2) sparse
    multiply, inverse transform."""
    s, u = qt.S, qt.U
    w3 = np.asarray(w).reshape(u, u, s)
    t2 = qt.forward(pilots.apply_adjoint(y)).reshape(u, s)
    out = np.einsum("abs,bs->as", w3, t2).reshape(-1)
    return qt.adjoint(out)


def apply_diag_filter(w: np.ndarray, y: np.ndarray, pilots, qt) -> np.ndarray:
    """Diagonal spectral filter (orthogonal-pilot fast path): the inverse
    transform of w times the spectral matched-filter output. Batch on
    leading axes of y, or of w when shapes broadcast."""
    t = qt.forward(pilots.apply_adjoint(y))
    return qt.adjoint(np.asarray(w) * t)


def block_circulant_from_kernel(w0: np.ndarray, s: int, u: int) -> np.ndarray:
    """Materialized block-circulant operator whose action is 2D circular
    convolution with w0 (test sizes only).

    Its spectral diagonal is the unnormalized 2D DFT of the kernel; with
    the unitary transform Q this reads Q^H diag(fft2(w0)) Q.
    """
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (s * u,):
        raise ValueError(f"expected kernel of length {s * u}, got {w0.shape}")
    eig = np.fft.fft2(w0.reshape(u, s)).reshape(-1)
    q = np.kron(dft_matrix(u), dft_matrix(s))
    return q.conj().T @ (eig[:, None] * q)
