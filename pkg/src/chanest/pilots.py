"""Pilot matrices, their Kronecker lift, and the 2D spectral transform.

A U x N pilot matrix X' acts on the vectorized S x U channel through
X = X'^T kron I_S (so X vec(H) = vec(H X')). Matrix-vector products with X
and X^H are evaluated through this identity in O(S*U*N) without forming X.
"""

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-10


@dataclass
class PilotSet:
    x_small: np.ndarray        # U x N pilot matrix
    S: int
    is_orthogonal: bool = field(init=False)

    def __post_init__(self):
        self.x_small = np.asarray(self.x_small, dtype=complex)
        if self.x_small.ndim != 2:
            raise ValueError("pilot matrix must be 2-D")
        if not np.all(np.isfinite(self.x_small.view(float))):
            raise ValueError("pilot matrix contains non-finite entries")
        u, n = self.x_small.shape
        gram_small = self.x_small @ self.x_small.conj().T
        self.is_orthogonal = bool(
            np.abs(gram_small - (n / u) * np.eye(u)).max() < ORTHO_TOL
        )
        self._lifted = None
        self._gram = None

    @property
    def U(self) -> int:
        return self.x_small.shape[0]

    @property
    def N(self) -> int:
        return self.x_small.shape[1]

    @property
    def x_lifted(self) -> np.ndarray:
        """Dense X = X'^T kron I_S, of shape (S*N, S*U). Materialized lazily."""
        if self._lifted is None:
            self._lifted = np.kron(self.x_small.T, np.eye(self.S))
        return self._lifted

    @property
    def gram(self) -> np.ndarray:
        """X^H X = conj(X' X'^H) kron I_S, of shape (S*U, S*U)."""
        if self._gram is None:
            self._gram = np.kron(np.conj(self.x_small @ self.x_small.conj().T),
                                 np.eye(self.S))
        return self._gram

    def apply(self, v: np.ndarray) -> np.ndarray:
        """X v for v of shape (..., S*U); returns (..., S*N)."""
        v2 = np.asarray(v).reshape(np.shape(v)[:-1] + (self.U, self.S))
        out = np.einsum("...us,un->...ns", v2, self.x_small)
        return out.reshape(np.shape(v)[:-1] + (self.S * self.N,))

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        """X^H y for y of shape (..., S*N); returns (..., S*U)."""
        y2 = np.asarray(y).reshape(np.shape(y)[:-1] + (self.N, self.S))
        out = np.einsum("...ns,un->...us", y2, np.conj(self.x_small))
        return out.reshape(np.shape(y)[:-1] + (self.S * self.U,))


def dft_pilots(U: int, N: int, S: int) -> PilotSet:
    """Pilots from the first U rows of an unnormalized N x N DFT, scaled by
    1/sqrt(U); guarantees X^H X = (N/U) I."""
    if U > N:
        raise ValueError(f"DFT pilots require U <= N, got U={U}, N={N}")
    rows = np.arange(U)
    cols = np.arange(N)
    x_small = np.exp(-2j * np.pi * np.outer(rows, cols) / N) / np.sqrt(U)
    return PilotSet(x_small, S)


def save_pilots(pilots: PilotSet, path) -> None:
    """Text format: header "U N", then real/imag pairs, row-major."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{pilots.U} {pilots.N}\n")
        for row in pilots.x_small:
            f.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) + "\n")


def load_pilots(path, S: int) -> PilotSet:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected header 'U N'")
        u, n = int(header[0]), int(header[1])
        values = [float(tok) for tok in f.read().split()]
    if len(values) != 2 * u * n:
        raise ValueError(f"{path}: expected {2 * u * n} decimals, found {len(values)}")
    flat = np.asarray(values).reshape(u * n, 2)
    return PilotSet((flat[:, 0] + 1j * flat[:, 1]).reshape(u, n), S)


class SpectralTransform:
    """The unitary transform diagonalizing separable circulant structure:
    the Kronecker product of the U- and S-point unitary DFTs, applied to
    length S*U vectors as a normalized 2D FFT. Never materialized."""

    def __init__(self, S: int, U: int):
        self.S = S
        self.U = U

    def _to_grid(self, v):
        v = np.asarray(v)
        if v.shape[-1] != self.S * self.U:
            raise ValueError(f"expected vectors of length {self.S * self.U}, "
                             f"got {v.shape[-1]}")
        return v.reshape(v.shape[:-1] + (self.U, self.S))

    def forward(self, v: np.ndarray) -> np.ndarray:
        out = np.fft.fft2(self._to_grid(v), norm="ortho")
        return out.reshape(np.shape(v))

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        out = np.fft.ifft2(self._to_grid(v), norm="ortho")
        return out.reshape(np.shape(v))

    def matrix(self) -> np.ndarray:
        """Dense transform, for oracle tests at small sizes."""
        from .numerics import dft_matrix
        return np.kron(dft_matrix(self.U), dft_matrix(self.S))
