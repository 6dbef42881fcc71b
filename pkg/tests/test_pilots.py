import numpy as np
import pytest

from chanest.numerics import dft_matrix
from chanest.pilots import (
    PilotSet,
    SpectralTransform,
    dft_pilots,
    load_pilots,
    save_pilots,
)


class TestDftPilots:
    def test_trivial_single_pilot(self):
        p = dft_pilots(1, 1, S=3)
        assert np.allclose(p.x_small, [[1.0]])
        assert np.allclose(p.x_lifted, np.eye(3))
        assert p.is_orthogonal

    def test_two_by_two(self):
        p = dft_pilots(2, 2, S=2)
        want = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.allclose(p.x_small, want)
        gram = p.x_lifted.conj().T @ p.x_lifted
        assert np.allclose(gram, np.eye(4), atol=1e-12)

    def test_more_pilots_than_streams(self):
        p = dft_pilots(2, 4, S=3)
        gram = p.x_lifted.conj().T @ p.x_lifted
        assert np.allclose(gram, 2.0 * np.eye(6), atol=1e-12)
        assert np.allclose(p.gram, gram)

    @pytest.mark.parametrize("u,n", [(1, 1), (2, 2), (2, 4), (4, 8), (8, 8)])
    def test_orthogonality_family(self, u, n):
        p = dft_pilots(u, n, S=3)
        su = 3 * u
        gram = p.x_lifted.conj().T @ p.x_lifted
        assert np.linalg.norm(gram - (n / u) * np.eye(su)) < 1e-10 * su
        assert p.is_orthogonal

    def test_rejects_u_greater_than_n(self):
        with pytest.raises(ValueError):
            dft_pilots(4, 2, S=2)


class TestPilotSet:
    def test_lift_identity(self):
        # X vec(H) equals vec(H X') for the lifted matrix
        rng = np.random.default_rng(0)
        s, u, n = 3, 2, 4
        x_small = rng.standard_normal((u, n)) + 1j * rng.standard_normal((u, n))
        p = PilotSet(x_small, s)
        h_mat = rng.standard_normal((s, u)) + 1j * rng.standard_normal((s, u))
        vec_h = h_mat.flatten(order="F")
        lhs = p.x_lifted @ vec_h
        rhs = (h_mat @ x_small).flatten(order="F")
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_apply_matches_dense(self):
        rng = np.random.default_rng(1)
        s, u, n = 3, 2, 4
        p = PilotSet(rng.standard_normal((u, n)) + 1j * rng.standard_normal((u, n)), s)
        v = rng.standard_normal(s * u) + 1j * rng.standard_normal(s * u)
        assert np.allclose(p.apply(v), p.x_lifted @ v, atol=1e-12)

    def test_adjoint_matches_dense(self):
        rng = np.random.default_rng(2)
        for s, u, n in [(1, 1, 1), (2, 2, 2), (3, 2, 4), (4, 4, 4)]:
            p = PilotSet(rng.standard_normal((u, n)) + 1j * rng.standard_normal((u, n)), s)
            y = rng.standard_normal(s * n) + 1j * rng.standard_normal(s * n)
            assert np.allclose(p.apply_adjoint(y), p.x_lifted.conj().T @ y, atol=1e-12)

    def test_adjoint_trivial_cases(self):
        p = PilotSet(np.array([[1.0]]), S=4)
        y = np.arange(4) + 0j
        assert np.allclose(p.apply_adjoint(y), y)
        assert np.allclose(p.apply_adjoint(np.zeros(4, complex)), 0)

    def test_non_orthogonal_detection(self):
        rng = np.random.default_rng(3)
        p = PilotSet(rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3)), 2)
        assert not p.is_orthogonal

    def test_batched_apply(self):
        rng = np.random.default_rng(4)
        p = dft_pilots(2, 3, S=4)
        batch = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        out = p.apply(batch)
        for i in range(5):
            assert np.allclose(out[i], p.x_lifted @ batch[i])

    def test_file_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        p = PilotSet(rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3)), 4)
        path = tmp_path / "pilots.txt"
        save_pilots(p, path)
        q = load_pilots(path, 4)
        assert np.allclose(q.x_small, p.x_small)
        with open(path) as f:
            assert f.readline().strip() == "2 3"

    def test_file_errors(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n1.0 0.0\n")
        with pytest.raises(ValueError):
            load_pilots(path, 2)


class TestSpectralTransform:
    def test_adjoint_inverts_forward(self):
        rng = np.random.default_rng(6)
        qt = SpectralTransform(5, 3)
        v = rng.standard_normal(15) + 1j * rng.standard_normal(15)
        assert np.linalg.norm(qt.adjoint(qt.forward(v)) - v) < 1e-10

    def test_impulse(self):
        qt = SpectralTransform(4, 2)
        e0 = np.zeros(8, complex)
        e0[0] = 1.0
        assert np.allclose(qt.forward(e0), np.ones(8) / np.sqrt(8))

    def test_matches_dense_kronecker(self):
        rng = np.random.default_rng(7)
        for s, u in [(2, 2), (3, 2), (4, 3), (8, 8)]:
            qt = SpectralTransform(s, u)
            dense = np.kron(dft_matrix(u), dft_matrix(s))
            v = rng.standard_normal(s * u) + 1j * rng.standard_normal(s * u)
            assert np.allclose(qt.forward(v), dense @ v, atol=1e-10)
            assert np.allclose(qt.adjoint(v), dense.conj().T @ v, atol=1e-10)
            assert np.allclose(qt.matrix(), dense)

    def test_isometry(self):
        rng = np.random.default_rng(8)
        qt = SpectralTransform(6, 4)
        v = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        assert np.linalg.norm(qt.forward(v)) == pytest.approx(np.linalg.norm(v), rel=1e-10)

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            SpectralTransform(4, 2).forward(np.ones(7))
