import unittest

import numpy as np

from termsv.data import simulate_panel
from termsv.exceptions import DomainError, EvaluationError, NumericalError
from termsv.gibbs import PosteriorSample
from termsv.likelihood import (SmcConfig, dic, loglik_no_sv, make_evaluator,
                               reduced_gibbs_moments, smc_loglik,
                               transition_logpdf)
from termsv.model import ModelSpec, Params
from termsv.oracles import kalman_for_params
from termsv.samplers import RngStream, mvt_logpdf


def nelson_siegel(sv=False, **kwargs):
    values = dict(lambdas=(0.01,), sigma_y=0.01, alpha=np.array([0.001, 0.0, -0.001]),
                  nu=15.0 if sv else None, beta0=np.array([4.0, -0.1, 0.05]),
                  Sigma0=np.diag([4e-4, 2e-4, 2e-4]))
    values.update(kwargs)
    return Params(ModelSpec(3, sv), **values)


class TestClosedForm(unittest.TestCase):
    def test_against_kalman(self):
        params = nelson_siegel()
        panel, _ = simulate_panel(params, T=25, N=6, seed=11)
        expected = kalman_for_params(panel, params).loglik
        self.assertAlmostEqual(loglik_no_sv(panel, params), expected,
                               delta=1e-8 * abs(expected))

    def test_needs_no_sv(self):
        params = nelson_siegel(sv=True)
        panel, _ = simulate_panel(params, T=5, N=4, seed=1)
        self.assertRaises(DomainError, loglik_no_sv, panel, params)


class TestTransition(unittest.TestCase):
    def test_sv_is_student_t(self):
        params = nelson_siegel(sv=True)
        beta_prev = np.array([4.0, -0.1, 0.05])
        beta = beta_prev + 0.01
        Sigma = np.diag([3e-4, 1e-4, 1e-4])
        df = params.nu - 2.0
        expected = mvt_logpdf(beta, beta_prev + params.alpha, params.gamma * Sigma / df, df)
        self.assertAlmostEqual(float(transition_logpdf(beta, beta_prev, Sigma, params)),
                               float(expected))

    def test_broadcasts_over_particles(self):
        params = nelson_siegel(sv=True)
        rng = RngStream(1)
        beta = rng.standard_normal((7, 3)) * 0.01
        Sigma = np.broadcast_to(params.Sigma0, (7, 3, 3))
        self.assertEqual(transition_logpdf(beta, np.zeros((7, 3)), Sigma, params).shape, (7,))


class TestSmc(unittest.TestCase):
    def test_config(self):
        self.assertRaises(DomainError, SmcConfig, n_particles=50)
        self.assertRaises(DomainError, SmcConfig, resample="never")
        self.assertRaises(DomainError, SmcConfig, proposal_df=2.0)
        self.assertEqual(SmcConfig().replace(threads=0).threads, 1)

    def test_proposals(self):
        params = nelson_siegel()
        panel, _ = simulate_panel(params, T=10, N=5, seed=3)
        proposals = reduced_gibbs_moments(panel, params, 30, RngStream(2), burnin=5)
        self.assertEqual(proposals.location.shape, (10, 3))
        self.assertEqual(proposals.scale.shape, (10, 3, 3))
        self.assertTrue(np.all(np.linalg.eigvalsh(proposals.scale) > 0))

    def test_no_sv_matches_closed_form(self):
        params = nelson_siegel()
        panel, _ = simulate_panel(params, T=15, N=4, seed=5)
        exact = loglik_no_sv(panel, params)

        proposals = reduced_gibbs_moments(panel, params, 50, RngStream(3), burnin=10)
        config = SmcConfig(n_particles=2000, replicates=4, threads=2, seed=4)
        result = smc_loglik(panel, params, proposals, config)
        self.assertEqual(len(result.contributions), 15)
        self.assertAlmostEqual(float(np.sum(result.contributions)), result.loglik, places=6)
        self.assertLess(abs(result.loglik - exact), 1.0 + 4.0 * result.replicate_sd)

    def test_sv_runs(self):
        params = nelson_siegel(sv=True, Sigma0=0.01 * np.eye(3))
        panel, _ = simulate_panel(params, T=12, N=5, seed=6)
        evaluator = make_evaluator(params.spec, SmcConfig(n_particles=500,
                                                          reduced_gibbs_cycles=20,
                                                          resample="adaptive"))
        first = evaluator(panel, params, 3)
        self.assertTrue(np.isfinite(first))
        # each evaluation index owns its random streams
        self.assertEqual(first, evaluator(panel, params, 3))


class TestDic(unittest.TestCase):
    def setUp(self):
        base = nelson_siegel()
        self.sample = PosteriorSample(base.spec, [base.replace(sigma_y=s)
                                                  for s in (0.01, 0.02, 0.03, 0.04)])
        self.calls = []

    def evaluator(self, panel, params, index=0):
        self.calls.append(index)
        return -100.0 * params.sigma_y

    def test_formula(self):
        result = dic(None, self.sample, self.evaluator, thin=1)
        at_mean = -100.0 * 0.025
        mean = -100.0 * 0.025
        self.assertAlmostEqual(result.loglik_at_mean, at_mean)
        self.assertAlmostEqual(result.mean_loglik, mean)
        self.assertAlmostEqual(result.p_d, 0.0)
        self.assertAlmostEqual(result.dic, -2.0 * at_mean)
        self.assertEqual(result.n_eval, 4)
        self.assertEqual(sorted(self.calls), [-1, 0, 1, 2, 3])

    def test_thinning(self):
        result = dic(None, self.sample, self.evaluator, thin=2, n_eval_draws=1)
        self.assertEqual(result.n_eval, 1)
        self.assertAlmostEqual(result.mean_loglik, -1.0)
        self.assertAlmostEqual(result.p_d, 2.0 * (-2.5 + 1.0))

    def test_threads(self):
        result = dic(None, self.sample, self.evaluator, thin=1, threads=3)
        self.assertAlmostEqual(result.mean_loglik, -2.5)

    def test_failed_draw(self):
        def evaluator(panel, params, index=0):
            if index == 2:
                raise NumericalError("singular")
            return 0.0

        with self.assertRaises(EvaluationError) as context:
            dic(None, self.sample, evaluator, thin=1)
        self.assertEqual(context.exception.draw, 2)

    def test_empty(self):
        self.assertRaises(DomainError, dic, None,
                          PosteriorSample(self.sample.spec, []), self.evaluator)


if __name__ == "__main__":
    unittest.main()
