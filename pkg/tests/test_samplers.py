import unittest

import numpy as np

from scipy.stats import multivariate_t

from termsv.exceptions import DomainError, NumericalError
from termsv.model import gamma_from_nu
from termsv.samplers import (RngStream, BandedPrecision, sample_gaussian_banded,
                             sample_wishart, sample_rank1_wishart,
                             sample_singular_beta, sample_precision_transition,
                             mvt_logpdf, sample_mvt, sample_inverse_gamma,
                             inverse_wishart_mean)


def block_tridiagonal(nb, m, rng):
    """A random SPD block tridiagonal matrix as (diag, sub, dense)."""
    sub = 0.3 * rng.standard_normal((nb - 1, m, m))
    diag = np.empty((nb, m, m))
    for k in range(nb):
        a = rng.standard_normal((m, m))
        diag[k] = a @ a.T + 4.0 * m * np.eye(m)

    dense = np.zeros((nb * m, nb * m))
    for k in range(nb):
        dense[k * m:(k + 1) * m, k * m:(k + 1) * m] = diag[k]
    for k in range(nb - 1):
        dense[(k + 1) * m:(k + 2) * m, k * m:(k + 1) * m] = sub[k]
        dense[k * m:(k + 1) * m, (k + 1) * m:(k + 2) * m] = sub[k].T

    return diag, sub, dense


class TestRngStream(unittest.TestCase):
    def test_reproducible(self):
        a = RngStream(7, ("origin", 3)).standard_normal(5)
        b = RngStream(7, ("origin", 3)).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(7, 0).standard_normal(5)
        b = RngStream(7, 1).standard_normal(5)
        c = RngStream(7, 0).substream(0).standard_normal(5)
        self.assertFalse(np.allclose(a, b))
        self.assertFalse(np.allclose(a, c))

    def test_negative_and_named_ids(self):
        rng = RngStream(1, ("eval", -1))
        self.assertEqual(len(rng.key), 2)
        self.assertTrue(all(part >= 0 for part in rng.key))


class TestBandedPrecision(unittest.TestCase):
    def setUp(self):
        self.rng = RngStream(11)
        self.diag, self.sub, self.dense = block_tridiagonal(6, 3, self.rng)

    def test_blocks_to_dense(self):
        prec = BandedPrecision.from_blocks(self.diag, self.sub)
        np.testing.assert_allclose(prec.to_dense(), self.dense)
        self.assertEqual(prec.bandwidth, 5)
        self.assertEqual(prec.dimension, 18)

    def test_against_dense(self):
        linear = self.rng.standard_normal(18)
        prec = BandedPrecision.from_blocks(self.diag, self.sub, linear=linear)
        np.testing.assert_allclose(prec.mean, np.linalg.solve(self.dense, linear))
        self.assertAlmostEqual(prec.logdet(), np.linalg.slogdet(self.dense)[1])

        dense_prec = BandedPrecision.from_dense(self.dense, 3, linear=linear)
        np.testing.assert_allclose(dense_prec.mean, prec.mean)

    def test_solve_upper(self):
        prec = BandedPrecision.from_blocks(self.diag, self.sub)
        z = self.rng.standard_normal(18)
        x = prec.solve_upper(z)
        lower = np.linalg.cholesky(self.dense)
        np.testing.assert_allclose(lower.T @ x, z, atol=1e-10)

    def test_sample_moments(self):
        mean = np.arange(18, dtype=float)
        prec = BandedPrecision.from_blocks(self.diag, self.sub, mean=mean)
        draws = sample_gaussian_banded(prec, self.rng, size=40000)
        self.assertEqual(draws.shape, (40000, 18))
        cov = np.linalg.inv(self.dense)
        np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.01)
        np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.005)

    def test_not_positive_definite(self):
        prec = BandedPrecision.from_blocks(-self.diag, self.sub)
        self.assertRaises(NumericalError, prec.factor)


class TestWishart(unittest.TestCase):
    def setUp(self):
        self.rng = RngStream(3)
        self.scale = np.array([[1.0, 0.3, 0.0],
                               [0.3, 0.5, 0.1],
                               [0.0, 0.1, 0.8]])

    def test_mean(self):
        draws = sample_wishart(7.5, self.scale, self.rng, size=20000)
        np.testing.assert_allclose(draws.mean(axis=0), 7.5 * self.scale, atol=0.15)

    def test_symmetric_positive_definite(self):
        draws = sample_wishart(3.2, self.scale, self.rng, size=100)
        np.testing.assert_array_equal(draws, np.swapaxes(draws, -1, -2))
        self.assertTrue(np.all(np.linalg.eigvalsh(draws) > 0))

    def test_domain(self):
        self.assertRaises(DomainError, sample_wishart, 1.5, self.scale, self.rng)
        self.assertRaises(DomainError, sample_wishart, 5.0, np.ones((2, 3)), self.rng)

    def test_rank1(self):
        draw = sample_rank1_wishart(self.scale, self.rng)
        self.assertEqual(np.linalg.matrix_rank(draw), 1)

    def test_singular_beta(self):
        psi = sample_singular_beta(24.0, 4, self.rng, size=50)
        eig = np.linalg.eigvalsh(psi)
        # I - Psi has rank one
        np.testing.assert_allclose(eig[:, 1:], 1.0, atol=1e-8)
        self.assertTrue(np.all((eig[:, 0] > 0) & (eig[:, 0] < 1)))

    def test_transition_stays_positive_definite(self):
        nu, m = 24.0, 4
        gamma = gamma_from_nu(nu, m)
        H = np.eye(m)
        for _ in range(500):
            H = sample_precision_transition(H, nu, gamma, self.rng)
            # the log determinant drifts, so keep the trace at m
            H *= m / np.trace(H)
            np.linalg.cholesky(H)

    def test_transition_mean(self):
        nu, m = 24.0, 3
        gamma = gamma_from_nu(nu, m)
        H_prev = np.linalg.inv(self.scale)
        draws = sample_precision_transition(H_prev, nu, gamma, self.rng, size=20000)
        expected = nu / (nu + 1.0) * H_prev / gamma
        np.testing.assert_allclose(draws.mean(axis=0), expected, atol=0.02)


class TestMultivariateT(unittest.TestCase):
    def test_logpdf(self):
        rng = RngStream(5)
        location = np.array([0.1, -0.2])
        scale = np.array([[0.5, 0.1], [0.1, 0.3]])
        x = rng.standard_normal((10, 2))
        expected = multivariate_t(loc=location, shape=scale, df=4.5).logpdf(x)
        np.testing.assert_allclose(mvt_logpdf(x, location, scale, 4.5), expected)

    def test_scalar(self):
        value = mvt_logpdf(0.0, 0.0, 1.0, 3.0)
        expected = multivariate_t(loc=[0.0], shape=[[1.0]], df=3.0).logpdf([0.0])
        self.assertAlmostEqual(float(np.squeeze(value)), float(expected))

    def test_sample_moments(self):
        rng = RngStream(6)
        scale = np.array([[0.5, 0.1], [0.1, 0.3]])
        draws = sample_mvt([1.0, 2.0], scale, 10.0, rng, size=40000)
        np.testing.assert_allclose(draws.mean(axis=0), [1.0, 2.0], atol=0.02)
        np.testing.assert_allclose(np.cov(draws.T), 10.0 / 8.0 * scale, atol=0.03)


class TestGamma(unittest.TestCase):
    def test_inverse_gamma_mean(self):
        draws = sample_inverse_gamma(6.0, 5.0, RngStream(8), size=40000)
        self.assertAlmostEqual(draws.mean(), 1.0, delta=0.02)

    def test_inverse_wishart_mean(self):
        np.testing.assert_allclose(inverse_wishart_mean(10.0, np.eye(3)), np.eye(3) / 6.0)
        self.assertRaises(DomainError, inverse_wishart_mean, 4.0, np.eye(3))


if __name__ == "__main__":
    unittest.main()
