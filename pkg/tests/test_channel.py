import numpy as np
import pytest

from chanest.channel import (
    ScenarioConfig,
    channel_covariance,
    covariance_first_column,
    draw_realizations,
    noise_variance_for_snr,
    nominal_noise_variance,
    sample_cluster_params,
    sample_observation,
    side_covariance,
    steering_vector,
)
from chanest.numerics import dft_matrix
from chanest.pilots import PilotSet, dft_pilots

# frozen from a 10^6-point trapezoid quadrature of the same integrand
# (single cluster at broadside, 35 degree spread, n = 4)
ORACLE_COL_35DEG = np.array([
    0.999999999999998,
    0.331582970691559,
    0.133395625863265,
    0.0319423312309889,
])

# frozen from the same oracle with a near-flat density (spread 1000 rad);
# matches the Bessel pattern J0(k*pi) of a uniform-in-angle power density
ORACLE_COL_FLAT = np.array([
    0.999999999999985,
    -0.304241652693723,
    0.220276735446243,
    -0.1812112622044,
])


class TestSampleClusterParams:
    def test_single_cluster_gain(self):
        cfg = ScenarioConfig(S=4, U=2, N=2, num_clusters=1)
        d = sample_cluster_params(cfg, np.random.default_rng(0))
        assert np.array_equal(d.gains, [1.0])

    def test_gains_normalized(self):
        cfg = ScenarioConfig(S=4, U=2, N=2, num_clusters=3)
        d = sample_cluster_params(cfg, np.random.default_rng(1))
        assert abs(d.gains.sum() - 1.0) < 1e-12
        assert np.all(d.gains > 0)

    def test_angles_in_front_hemisphere(self):
        cfg = ScenarioConfig(S=4, U=2, N=2, num_clusters=5)
        d = sample_cluster_params(cfg, np.random.default_rng(2))
        for angles in (d.angles_tx, d.angles_rx):
            assert np.all(np.abs(angles) <= np.pi / 2)

    def test_deterministic_for_fixed_seed(self):
        cfg = ScenarioConfig(S=4, U=2, N=2, num_clusters=3, seed=9)
        d1 = sample_cluster_params(cfg, np.random.default_rng(9))
        d2 = sample_cluster_params(cfg, np.random.default_rng(9))
        assert np.array_equal(d1.angles_tx, d2.angles_tx)
        assert np.array_equal(d1.angles_rx, d2.angles_rx)
        assert np.array_equal(d1.gains, d2.gains)


class TestSteeringVector:
    def test_broadside(self):
        assert np.allclose(steering_vector(0.0, 4), np.ones(4))

    def test_endfire_two_elements(self):
        assert np.allclose(steering_vector(np.pi / 2, 2), [1.0, -1.0])

    def test_unit_modulus_and_norm(self):
        a = steering_vector(0.37, 8)
        assert np.allclose(np.abs(a), 1.0)
        assert np.vdot(a, a).real == pytest.approx(8.0)


class TestSideCovariance:
    def test_dirac_limit_is_rank_one(self):
        theta0 = 0.3
        n = 4
        c = side_covariance([theta0], [1.0], 1e-4, n)
        a = steering_vector(theta0, n)
        assert np.linalg.norm(c - np.outer(a, a.conj())) < 0.01 * n

    def test_unit_diagonal(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            angles = rng.uniform(-np.pi / 2, np.pi / 2, 3)
            gains = rng.dirichlet(np.ones(3))
            c = side_covariance(angles, gains, rng.uniform(0.01, 1.0), 5)
            assert np.allclose(np.diag(c).real, 1.0, atol=1e-9)
            assert np.allclose(np.diag(c).imag, 0.0, atol=1e-12)

    def test_matches_high_resolution_quadrature(self):
        col = covariance_first_column([0.0], [1.0], np.deg2rad(35.0), 4)
        assert np.abs(col.real - ORACLE_COL_35DEG).max() < 2e-6
        assert np.abs(col.imag).max() < 1e-9

    def test_flat_density_matches_oracle(self):
        col = covariance_first_column([0.0], [1.0], 1000.0, 4)
        assert np.abs(col.real - ORACLE_COL_FLAT).max() < 1e-8

    def test_hermitian_toeplitz_psd(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            angles = rng.uniform(-np.pi / 2, np.pi / 2, 2)
            c = side_covariance(angles, [0.5, 0.5], rng.uniform(0.02, 0.7), 6)
            assert np.allclose(c, c.conj().T)
            assert np.linalg.eigvalsh(c).min() > -1e-10


class TestChannelCovariance:
    def _delta(self, clusters=1, seed=0):
        cfg = ScenarioConfig(S=4, U=2, N=2, num_clusters=clusters)
        return sample_cluster_params(cfg, np.random.default_rng(seed))

    def test_single_antenna_tx_reduces_to_rx_side(self):
        d = self._delta()
        cov = channel_covariance(d, S=5, U=1)
        assert np.allclose(cov.full, cov.cov_rx)

    def test_trace_normalization(self):
        d = self._delta(clusters=3, seed=1)
        cov = channel_covariance(d, S=6, U=2)
        assert np.trace(cov.full).real == pytest.approx(12.0, abs=1e-8)

    def test_block_toeplitz_with_toeplitz_blocks(self):
        d = self._delta(clusters=2, seed=2)
        s, u = 3, 3
        cov = channel_covariance(d, S=s, U=u)
        blocks = cov.full.reshape(u, s, u, s).transpose(0, 2, 1, 3)
        for a in range(u):
            for b in range(u):
                blk = blocks[a, b]
                for k in range(1, s):
                    assert np.allclose(np.diag(blk, -k), np.diag(blk, -k)[0])
        # blocks constant along block diagonals
        for a in range(u - 1):
            for b in range(u - 1):
                assert np.allclose(blocks[a, b], blocks[a + 1, b + 1])

    def test_kronecker_mixed_product(self):
        d = self._delta(seed=3)
        cov = channel_covariance(d, S=4, U=3)
        a_t = steering_vector(0.2, 3)
        a_r = steering_vector(-0.4, 4)
        lhs = cov.full @ np.kron(a_t, a_r)
        rhs = np.kron(cov.cov_tx @ a_t, cov.cov_rx @ a_r)
        assert np.allclose(lhs, rhs, atol=1e-10)


class TestNoiseVariance:
    def test_orthogonal_zero_db(self):
        d = sample_cluster_params(ScenarioConfig(S=4, U=2, N=2), np.random.default_rng(0))
        cov = channel_covariance(d, 4, 2)
        pilots = dft_pilots(2, 2, 4)
        assert noise_variance_for_snr(cov, pilots, 0.0) == pytest.approx(1.0)
        assert noise_variance_for_snr(cov, pilots, 10.0) == pytest.approx(0.1)

    def test_general_pilots_match_dense_trace(self):
        rng = np.random.default_rng(5)
        d = sample_cluster_params(ScenarioConfig(S=3, U=2, N=4), rng)
        cov = channel_covariance(d, 3, 2)
        x_small = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        pilots = PilotSet(x_small, 3)
        got = noise_variance_for_snr(cov, pilots, 7.0)
        x = pilots.x_lifted
        want = np.real(np.trace(cov.full @ x.conj().T @ x)) / (3 * 4 * 10 ** 0.7)
        assert got == pytest.approx(want, rel=1e-12)

    def test_closed_form_for_orthogonal(self):
        # (N/U) * trace(C) / (S*N*snr) against the general trace path
        d = sample_cluster_params(ScenarioConfig(S=5, U=2, N=4), np.random.default_rng(6))
        cov = channel_covariance(d, 5, 2)
        pilots = dft_pilots(2, 4, 5)
        got = noise_variance_for_snr(cov, pilots, 3.0)
        want = (4 / 2) * np.trace(cov.full).real / (5 * 4 * 10 ** 0.3)
        assert got == pytest.approx(want, rel=1e-12)
        assert nominal_noise_variance(pilots, 3.0) == pytest.approx(got, rel=1e-12)


class TestSampleObservation:
    def test_noiseless(self):
        d = sample_cluster_params(ScenarioConfig(S=4, U=2, N=3), np.random.default_rng(0))
        cov = channel_covariance(d, 4, 2)
        pilots = dft_pilots(2, 3, 4)
        h, y = sample_observation(cov, pilots, 0.0, np.random.default_rng(1))
        assert np.allclose(y, pilots.apply(h))

    def test_empirical_covariance(self):
        d = sample_cluster_params(ScenarioConfig(S=4, U=2, N=2), np.random.default_rng(2))
        cov = channel_covariance(d, 4, 2)
        pilots = dft_pilots(2, 2, 4)
        rng = np.random.default_rng(3)
        hs = np.stack([sample_observation(cov, pilots, 0.1, rng)[0]
                       for _ in range(100_000)])
        emp = hs.T @ hs.conj() / len(hs)
        rel = np.linalg.norm(emp - cov.full) / np.linalg.norm(cov.full)
        assert rel < 0.05

    def test_deterministic(self):
        d = sample_cluster_params(ScenarioConfig(S=4, U=2, N=2), np.random.default_rng(4))
        cov = channel_covariance(d, 4, 2)
        pilots = dft_pilots(2, 2, 4)
        h1, y1 = sample_observation(cov, pilots, 0.2, np.random.default_rng(7))
        h2, y2 = sample_observation(cov, pilots, 0.2, np.random.default_rng(7))
        assert np.array_equal(h1, h2)
        assert np.array_equal(y1, y2)

    def test_rejects_negative_noise(self):
        d = sample_cluster_params(ScenarioConfig(S=2, U=1, N=1), np.random.default_rng(0))
        cov = channel_covariance(d, 2, 1)
        with pytest.raises(ValueError):
            sample_observation(cov, dft_pilots(1, 1, 2), -1.0, np.random.default_rng(0))


class TestCirculantApproximation:
    def test_error_decreases_with_array_size(self):
        cfg = ScenarioConfig(S=8, U=2, N=2, num_clusters=1, seed=0)
        d = sample_cluster_params(cfg, np.random.default_rng(11))
        errors = []
        for s in (8, 16, 32, 64):
            cov = channel_covariance(d, s, 2)
            q = np.kron(dft_matrix(2), dft_matrix(s))
            diag = np.diag(np.diag(q @ cov.full @ q.conj().T))
            approx = q.conj().T @ diag @ q
            errors.append(np.linalg.norm(cov.full - approx) / (s * 2))
        for a, b in zip(errors, errors[1:]):
            assert b < a * 1.05  # monotone within noise


class TestScenarioConfigJson:
    def test_roundtrip(self, tmp_path):
        cfg = ScenarioConfig(S=16, U=2, N=2, num_clusters=3, spread_tx_deg=35.0,
                             spread_rx_deg=2.0, snr_db=5.0, seed=42)
        path = tmp_path / "scenario.json"
        cfg.to_json(path)
        assert ScenarioConfig.from_json(path) == cfg

    def test_field_names(self, tmp_path):
        import json
        cfg = ScenarioConfig(S=4, U=2, N=2)
        path = tmp_path / "scenario.json"
        cfg.to_json(path)
        with open(path) as f:
            data = json.load(f)
        assert set(data) == {"S", "U", "N", "num_clusters", "spread_tx_deg",
                             "spread_rx_deg", "snr_db", "seed"}

    def test_validation(self):
        with pytest.raises(ValueError):
            ScenarioConfig(S=0, U=1, N=1)
        with pytest.raises(ValueError):
            ScenarioConfig(S=1, U=1, N=1, num_clusters=0)


class TestDrawRealizations:
    def test_chunking_invariant(self):
        cfg = ScenarioConfig(S=4, U=2, N=2, num_clusters=2, snr_db=5.0)
        pilots = dft_pilots(2, 2, 4)
        children = np.random.SeedSequence(0).spawn(6)
        all_at_once = draw_realizations(cfg, pilots, [np.random.default_rng(c) for c in children])
        chunked = (draw_realizations(cfg, pilots, [np.random.default_rng(c) for c in children[:2]])
                   + draw_realizations(cfg, pilots, [np.random.default_rng(c) for c in children[2:]]))
        for a, b in zip(all_at_once, chunked):
            assert np.array_equal(a.h, b.h)
            assert np.array_equal(a.y, b.y)
            assert a.sigma2 == b.sigma2
