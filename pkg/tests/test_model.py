import unittest

import numpy as np

from scipy.optimize import minimize_scalar
from scipy.stats import invwishart

from termsv.exceptions import DomainError
from termsv.model import (ModelSpec, Params, loading_matrix, loading_row,
                          gamma_from_nu, price_moments, innovation_cov,
                          ewma_innovation_cov, log_prior, log_prior_terms,
                          sigma0_prior_scale, LAMBDA_SUPPORT)


def svensson_params(**kwargs):
    values = dict(lambdas=(0.0036, 0.0158), sigma_y=0.0032,
                  alpha=np.zeros(4), nu=24.0, beta0=np.array([4.0, -0.1, 0.05, 0.02]),
                  Sigma0=0.01 * np.eye(4))
    values.update(kwargs)
    return Params(ModelSpec(4, True), **values)


class TestModelSpec(unittest.TestCase):
    def test_names(self):
        self.assertEqual(ModelSpec(4, True).name, "4F-SV")
        self.assertEqual(ModelSpec(3, False).name, "3F-noSV")
        self.assertEqual(ModelSpec.from_name("3f-nosv"), ModelSpec(3, False))
        self.assertEqual(ModelSpec.from_name("4F-SV"), ModelSpec(4, True))

    def test_lambda_count(self):
        self.assertEqual(ModelSpec(3).n_lambda, 1)
        self.assertEqual(ModelSpec(4).n_lambda, 2)

    def test_invalid(self):
        self.assertRaises(DomainError, ModelSpec, 5)
        self.assertRaises(DomainError, ModelSpec.from_name, "xF-SV")


class TestLoadings(unittest.TestCase):
    def curvature_peak(self, lam):
        result = minimize_scalar(lambda tau: -loading_row(tau, [lam], 3)[2],
                                 bounds=(1.0, 2000.0), method="bounded",
                                 options={"xatol": 1e-6})
        return result.x

    def test_curvature_peaks(self):
        self.assertAlmostEqual(self.curvature_peak(0.0036), 498.0, delta=0.5)
        self.assertAlmostEqual(self.curvature_peak(0.0158), 113.5, delta=0.5)

    def test_first_column_is_level(self):
        Z = loading_matrix(np.array([[10.0, 200.0], [30.0, 700.0]]), (0.0036, 0.0158), 4)
        self.assertEqual(Z.shape, (2, 2, 4))
        np.testing.assert_array_equal(Z[..., 0], 1.0)

    def test_series_limit(self):
        # lambda * tau crosses the series threshold without a jump
        below = loading_row(1.0, [0.999e-6], 3)
        above = loading_row(1.0, [1.001e-6], 3)
        np.testing.assert_allclose(below, above, atol=1e-9)
        np.testing.assert_allclose(loading_row(1.0, [1e-9], 3), [1.0, 1.0, 0.0], atol=1e-8)

    def test_closed_form(self):
        x = 0.0036 * 100.0
        slope = (1 - np.exp(-x)) / x
        np.testing.assert_allclose(loading_row(100.0, [0.0036], 3),
                                   [1.0, slope, slope - np.exp(-x)])

    def test_second_curvature(self):
        row = loading_row(80.0, (0.0036, 0.0158), 4)
        x = 0.0158 * 80.0
        self.assertAlmostEqual(row[3], (1 - np.exp(-x)) / x - np.exp(-x))

    def test_invalid(self):
        self.assertRaises(DomainError, loading_row, 0.0, [0.01], 3)
        self.assertRaises(DomainError, loading_matrix, [10.0], [0.01], 4)


class TestGamma(unittest.TestCase):
    def test_anchors(self):
        self.assertAlmostEqual(gamma_from_nu(27.72, 4), 0.958, places=3)
        self.assertAlmostEqual(gamma_from_nu(21.75, 3), 0.947, places=3)

    def test_domain(self):
        self.assertRaises(DomainError, gamma_from_nu, 5.0, 4)
        self.assertRaises(DomainError, gamma_from_nu, 4.5, 4)
        self.assertGreater(gamma_from_nu(5.01, 4), 0.0)


class TestParams(unittest.TestCase):
    def test_text(self):
        params = svensson_params()
        loaded = Params.from_text(params.to_text())
        self.assertEqual(loaded.spec, params.spec)
        self.assertEqual(loaded.lambdas, params.lambdas)
        self.assertEqual(loaded.nu, params.nu)
        np.testing.assert_array_equal(loaded.beta0, params.beta0)
        np.testing.assert_array_equal(loaded.Sigma0, params.Sigma0)

    def test_from_text_defaults(self):
        params = Params.from_text("m=3\nsv=false\nlambda1=0.01\nsigma_y=0.002\n"
                                  "sigma0=1,0,1,0,0,1\n")
        self.assertFalse(params.spec.sv)
        np.testing.assert_array_equal(params.alpha, np.zeros(3))
        np.testing.assert_array_equal(params.Sigma0, np.eye(3))

    def test_invalid(self):
        self.assertRaises(DomainError, svensson_params, nu=4.5)
        self.assertRaises(DomainError, svensson_params, nu=None)
        self.assertRaises(DomainError, svensson_params, lambdas=(0.01,))
        self.assertRaises(DomainError, svensson_params, lambdas=(0.01, 0.01))
        self.assertRaises(DomainError, svensson_params, sigma_y=-1.0)
        self.assertRaises(DomainError, svensson_params, Sigma0=-np.eye(4))
        self.assertRaises(DomainError, Params.from_text, "m=4\nlambda1=0.01\n")

    def test_replace(self):
        params = svensson_params()
        other = params.replace(nu=30.0)
        self.assertEqual(other.nu, 30.0)
        self.assertEqual(params.nu, 24.0)
        self.assertEqual([k for k, _ in other.scalars()],
                         ["lambda1", "lambda2", "sigma_y", "alpha1", "alpha2",
                          "alpha3", "alpha4", "nu"])


class TestMoments(unittest.TestCase):
    def test_price_moments(self):
        params = svensson_params()
        tau = np.array([30.0, 400.0])
        cov = np.diag([0.04, 0.01, 0.01, 0.01])
        mean, var = price_moments(params, params.beta0, cov, tau)
        Z = loading_matrix(tau, params.lambdas, 4)
        np.testing.assert_allclose(mean, Z @ params.beta0)
        np.testing.assert_allclose(var, np.diag(Z @ cov @ Z.T) + params.sigma_y ** 2)

    def test_innovation_cov(self):
        params = svensson_params()
        np.testing.assert_allclose(innovation_cov(params), 0.01 * np.eye(4) / 20.0)
        flat = Params(ModelSpec(3, False), [0.01], 0.002, Sigma0=np.eye(3))
        np.testing.assert_array_equal(innovation_cov(flat), np.eye(3))

    def test_ewma(self):
        params = svensson_params()
        eta = np.array([[0.1, 0.0, 0.0, 0.0], [0.0, 0.2, 0.0, 0.0]])
        out = ewma_innovation_cov(eta, params)
        gamma = params.gamma
        self.assertEqual(out.shape, (3, 4, 4))
        np.testing.assert_allclose(out[0], innovation_cov(params))
        np.testing.assert_allclose(out[1], (1 - gamma) * np.outer(eta[0], eta[0])
                                   + gamma * out[0])


class TestPrior(unittest.TestCase):
    def test_support(self):
        params = svensson_params(Sigma0=0.01 * np.eye(4))
        self.assertEqual(log_prior(params.replace(Sigma0=0.5 * np.eye(4))), -np.inf)
        self.assertEqual(log_prior(params.replace(lambdas=(0.02, 0.01))), -np.inf)
        self.assertEqual(log_prior(params.replace(
            lambdas=(LAMBDA_SUPPORT[0] / 2, 0.01))), -np.inf)
        self.assertTrue(np.isfinite(log_prior(params)))

    def test_sigma0_no_sv(self):
        params = Params(ModelSpec(3, False), (0.01,), 0.01, alpha=np.zeros(3),
                        beta0=np.zeros(3), Sigma0=0.01 * np.eye(3))
        scale = sigma0_prior_scale(3)
        np.testing.assert_allclose(scale, 0.15 ** 2 / 13 * np.eye(3))
        self.assertAlmostEqual(log_prior_terms(params)["Sigma0"],
                               invwishart.logpdf(0.01 * np.eye(3), df=13, scale=scale))
        self.assertEqual(log_prior_terms(svensson_params())["Sigma0"], 0.0)


if __name__ == "__main__":
    unittest.main()
