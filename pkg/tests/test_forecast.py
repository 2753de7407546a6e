import os
import shutil
import tempfile
import unittest

from unittest.mock import patch

import numpy as np

from scipy.stats import multivariate_normal, norm

import termsv.forecast

from termsv.data import simulate_panel
from termsv.exceptions import (DataError, DomainError, ForecastError,
                               InsufficientDataError)
from termsv.forecast import (BacktestConfig, Portfolio, VarFit,
                             benchmark_var_forecast, cross_section_variance,
                             default_portfolios, extend_chain_state,
                             extract_factors_ls, fit_factor_var,
                             pearson_residuals, point_variance_forecast,
                             predictive_logdensity,
                             predictive_logdensity_bruteforce,
                             random_walk_forecast, records_frame, required_draws,
                             rolling_backtest, simulate_factor_forecast,
                             summarize_backtest, var_forecast_mc)
from termsv.gibbs import (GibbsConfig, PosteriorSample, TerminalState,
                          chain_state_from_params, run_chain)
from termsv.model import ModelSpec, Params, loading_matrix
from termsv.samplers import RngStream


def nelson_siegel(sv=False, **kwargs):
    values = dict(lambdas=(0.01,), sigma_y=0.01, alpha=np.array([0.001, 0.0, -0.001]),
                  nu=15.0 if sv else None, beta0=np.array([4.0, -0.1, 0.05]),
                  Sigma0=np.diag([4e-4, 2e-4, 2e-4]))
    values.update(kwargs)
    return Params(ModelSpec(3, sv), **values)


class TestPortfolio(unittest.TestCase):
    def test_equal(self):
        portfolio = Portfolio.equal(4)
        self.assertAlmostEqual(portfolio.weights.sum(), 1.0)
        self.assertAlmostEqual(portfolio.returns(np.zeros(4), np.arange(4.0)), 1.5)

    def test_bull_spread(self):
        portfolio = Portfolio.bull_spread(10)
        self.assertEqual(portfolio.weights[0], 1.0)
        self.assertEqual(portfolio.weights[7], -1.0)
        self.assertEqual(np.count_nonzero(portfolio.weights), 2)
        self.assertRaises(DomainError, Portfolio.bull_spread, 6)

    def test_default(self):
        self.assertEqual([p.name for p in default_portfolios(24)], ["equal", "bullspread"])
        self.assertEqual([p.name for p in default_portfolios(5)], ["equal"])

    def test_invalid(self):
        self.assertRaises(DomainError, Portfolio, np.zeros(3))
        self.assertRaises(DomainError, Portfolio, [1.0, np.nan])
        self.assertRaises(DomainError, Portfolio.equal(3).check, 4)

    def test_from_file(self):
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, "weights.txt")
            with open(path, "w") as fd:
                fd.write("0.5, 0.5\n-1\n")
            portfolio = Portfolio.from_file(path, "mine")
            np.testing.assert_array_equal(portfolio.weights, [0.5, 0.5, -1.0])
            self.assertEqual(portfolio.name, "mine")

            with open(path, "w") as fd:
                fd.write("0.5,abc\n")
            self.assertRaises(DataError, Portfolio.from_file, path)
            self.assertRaises(DataError, Portfolio.from_file,
                              os.path.join(tmpdir, "missing.txt"))
        finally:
            shutil.rmtree(tmpdir)


class TestPredictiveDensity(unittest.TestCase):
    def setUp(self):
        self.params = nelson_siegel(sigma_y=0.02, Sigma0=1e-4 * np.eye(3))
        self.beta = np.array([4.0, -0.1, 0.05])
        self.tau = np.array([20.0, 50.0, 80.0, 110.0])
        self.Z = loading_matrix(self.tau, self.params.lambdas, 3)
        self.y = self.Z @ (self.beta + self.params.alpha) + 0.01

    def sample(self, copies=1):
        terminal = TerminalState(self.beta, None, None)
        return PosteriorSample(self.params.spec, [self.params] * copies,
                               [terminal] * copies)

    def test_single_draw_is_gaussian(self):
        cov = self.Z @ self.params.Sigma0 @ self.Z.T + 0.02 ** 2 * np.eye(4)
        expected = multivariate_normal.logpdf(self.y, self.Z @ (self.beta + self.params.alpha),
                                              cov)
        value = predictive_logdensity(self.sample(), self.y, self.tau, RngStream(1))
        self.assertAlmostEqual(value, expected)

    def test_bruteforce(self):
        exact = predictive_logdensity(self.sample(), self.y, self.tau, RngStream(1))
        brute = predictive_logdensity_bruteforce(self.sample(20000), self.y, self.tau,
                                                 RngStream(2))
        self.assertAlmostEqual(brute, exact, delta=0.05)

    def test_needs_terminal_states(self):
        sample = PosteriorSample(self.params.spec, [self.params])
        self.assertRaises(ForecastError, predictive_logdensity, sample, self.y,
                          self.tau, RngStream(1))

    def test_stochastic_volatility(self):
        params = nelson_siegel(sv=True, Sigma0=0.01 * np.eye(3))
        terminal = TerminalState(self.beta, 400.0 * np.eye(3), 0.01 * np.eye(3))
        sample = PosteriorSample(params.spec, [params] * 50, [terminal] * 50)
        value = predictive_logdensity(sample, self.y, self.tau, RngStream(3), n_draws=10)
        self.assertTrue(np.isfinite(value))


class TestPointForecast(unittest.TestCase):
    def setUp(self):
        self.params = nelson_siegel()
        self.Z = loading_matrix(np.array([20.0, 50.0, 80.0]), self.params.lambdas, 3)

    def test_single_draw(self):
        beta = np.array([[4.0, -0.1, 0.05]])
        mean, cov = point_variance_forecast(beta, self.params, self.Z)
        np.testing.assert_allclose(mean, self.Z @ beta[0])
        np.testing.assert_allclose(cov, 0.01 ** 2 * np.eye(3), atol=1e-18)

    def test_pearson(self):
        mean = np.array([1.0, 2.0])
        cov = np.diag([4.0, 0.25])
        np.testing.assert_allclose(pearson_residuals(mean, cov, mean), [0.0, 0.0])
        np.testing.assert_allclose(pearson_residuals(mean, cov, [3.0, 2.5]), [1.0, 1.0])
        self.assertRaises(ForecastError, pearson_residuals, mean, np.diag([1.0, 0.0]), mean)

    def test_simulated_factors(self):
        panel, _ = simulate_panel(self.params, T=10, N=5, seed=2)
        draws = simulate_factor_forecast(panel, self.params, 120, RngStream(4), cycles=7,
                                         burnin=2)
        self.assertEqual(draws.shape, (120, 3))
        self.assertTrue(np.all(np.isfinite(draws)))


class TestValueAtRisk(unittest.TestCase):
    def setUp(self):
        self.params = nelson_siegel(sigma_y=0.0)
        self.Z = loading_matrix(np.array([20.0, 50.0, 80.0]), self.params.lambdas, 3)
        self.portfolio = Portfolio([1.0, 0.0, -1.0], "spread")
        self.y_last = np.array([4.0, 3.9, 3.8])

    def test_degenerate(self):
        beta = np.array([4.0, -0.1, 0.05])
        draws = np.tile(beta, (2000, 1))
        var = var_forecast_mc(draws, self.params, self.Z, self.y_last, self.portfolio,
                              (0.05, 0.10), RngStream(1))
        expected = self.portfolio.weights @ (self.Z @ beta - self.y_last)
        self.assertEqual(list(var), [0.05, 0.10])
        for value in var.values():
            self.assertAlmostEqual(value, expected)

    def test_too_few_draws(self):
        draws = np.zeros((500, 3))
        self.assertRaises(ForecastError, var_forecast_mc, draws, self.params, self.Z,
                          self.y_last, self.portfolio, (0.01,), RngStream(1))
        self.assertRaises(DomainError, var_forecast_mc, draws, self.params, self.Z,
                          self.y_last, self.portfolio, (0.0,), RngStream(1))

    def test_benchmark(self):
        Sigma = np.diag([1e-4, 4e-4, 9e-4])
        fit = VarFit(np.zeros(3), np.zeros((3, 3)), Sigma)
        factors = np.ones((10, 3))
        var, mean, sd = benchmark_var_forecast(factors, self.Z, self.y_last,
                                               self.portfolio, (0.01, 0.05), 1e-6, fit)
        omega = self.portfolio.weights
        self.assertAlmostEqual(mean, -omega @ self.y_last)
        cov = self.Z @ Sigma @ self.Z.T + 1e-6 * np.eye(3)
        self.assertAlmostEqual(sd, np.sqrt(omega @ cov @ omega))
        self.assertAlmostEqual(var[0.05], mean + sd * norm.ppf(0.05))

    def test_fit_factor_var(self):
        rng = RngStream(5)
        Omega = np.diag([0.5, 0.2, -0.3])
        mu = np.array([0.1, 0.0, -0.1])
        factors = np.zeros((4000, 3))
        for t in range(1, 4000):
            factors[t] = mu + Omega @ factors[t - 1] + 0.1 * rng.standard_normal(3)
        fit = fit_factor_var(factors)
        np.testing.assert_allclose(fit.Omega, Omega, atol=0.05)
        np.testing.assert_allclose(fit.mu, mu, atol=0.02)
        np.testing.assert_allclose(fit.Sigma, 0.01 * np.eye(3), atol=0.002)

    def test_fit_factor_var_least_squares(self):
        factors = np.cumsum(RngStream(6).standard_normal((40, 3)), axis=0)
        X = np.column_stack([np.ones(39), factors[:-1]])
        coef = np.linalg.lstsq(X, factors[1:], rcond=None)[0]
        resid = factors[1:] - X @ coef
        fit = fit_factor_var(factors)
        np.testing.assert_allclose(fit.mu, coef[0], atol=1e-10)
        np.testing.assert_allclose(fit.Omega, coef[1:].T, atol=1e-10)
        np.testing.assert_allclose(fit.Sigma, resid.T @ resid / (39 - 4), atol=1e-10)

    def test_fit_factor_var_invalid(self):
        self.assertRaises(InsufficientDataError, fit_factor_var, np.zeros((6, 3)))
        self.assertRaises(DataError, fit_factor_var, np.ones((20, 3)))

    def test_required_draws(self):
        self.assertEqual(required_draws((0.01, 0.05, 0.10)), 10000)
        self.assertEqual(required_draws((0.10, 0.05)), 2000)
        self.assertEqual(required_draws((0.03,)), 3334)

    def test_random_walk(self):
        prices = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(random_walk_forecast(prices), [3.0, 4.0])
        self.assertRaises(InsufficientDataError, random_walk_forecast, np.zeros((0, 2)))


class TestExtractedFactors(unittest.TestCase):
    def test_noise_free(self):
        params = nelson_siegel(sigma_y=0.0)
        panel, state = simulate_panel(params, T=15, N=6, seed=8)
        factors = extract_factors_ls(panel, params.lambdas, 3)
        np.testing.assert_allclose(factors, state.beta[1:], atol=1e-8)
        self.assertLess(cross_section_variance(panel, params.lambdas, 3, factors), 1e-16)


class TestBacktest(unittest.TestCase):
    def setUp(self):
        self.params = nelson_siegel()
        self.panel, _ = simulate_panel(self.params, T=13, N=8, seed=21)
        self.config = BacktestConfig(gibbs=GibbsConfig(n_iterations=30, n_burnin=10, seed=3),
                                     warm_cycles=10, reduced_cycles=10, reduced_burnin=2,
                                     forecast_draws=2000, levels=(0.05, 0.10))

    def test_single_origin(self):
        result = rolling_backtest(self.panel, self.params.spec, 11, 12, self.config)
        self.assertEqual(result.failures, [])
        self.assertEqual(len(result.records), 1)

        record = result.records[0]
        self.assertEqual(record.target_date, self.panel.dates[11])
        self.assertEqual(sorted(record.returns), ["bullspread", "equal"])
        np.testing.assert_array_equal(record.rw_forecast, self.panel.prices[10])
        self.assertTrue(np.isfinite(record.log_pred_density))

        reference = {record.target_date: record.log_pred_density - 1.5}
        summary = summarize_backtest(result.records, reference)
        np.testing.assert_allclose(summary.accumulated["difference"], [0.0, 1.5])
        self.assertEqual(list(summary.rmsfe["bucket"]), ["1-8", "all"])
        self.assertEqual(len(summary.var), 2 * 2 * 2)

        frame = records_frame(result.records)
        self.assertIn("var_equal_0.05", frame.columns)
        self.assertIn("bhit_bullspread_0.1", frame.columns)

    def test_warm_start(self):
        result = rolling_backtest(self.panel, self.params.spec, 11, 13, self.config)
        self.assertEqual(len(result.records), 2)
        self.assertEqual([r.target_date for r in result.records], list(self.panel.dates[11:13]))

    def test_default_levels(self):
        config = BacktestConfig(gibbs=self.config.gibbs, warm_cycles=10, reduced_cycles=10,
                                reduced_burnin=2, forecast_draws=2000)
        self.assertEqual(config.levels, (0.01, 0.05, 0.10))
        result = rolling_backtest(self.panel, self.params.spec, 11, 12, config)
        self.assertEqual(result.failures, [])
        self.assertEqual(list(result.records[0].var_quantiles["equal"]), [0.01, 0.05, 0.1])

    def test_warm_start_after_failure(self):
        panel, _ = simulate_panel(self.params, T=17, N=8, seed=22)
        original = termsv.forecast.forecast_origin

        def failing(panel, k, *args):
            if k == 12:
                raise ForecastError("no draws left")
            return original(panel, k, *args)

        with patch.object(termsv.forecast, "forecast_origin", failing):
            result = rolling_backtest(panel, self.params.spec, 11, 17, self.config)

        self.assertEqual(result.failures, [(12, "no draws left")])
        self.assertEqual([r.target_date for r in result.records],
                         [panel.dates[k] for k in (11, 13, 14, 15, 16)])

    def test_unexpected_error_is_recorded(self):
        def broken(*args):
            raise ValueError("operands could not be broadcast together")

        with patch.object(termsv.forecast, "forecast_origin", broken):
            result = rolling_backtest(self.panel, self.params.spec, 11, 13, self.config)

        self.assertEqual(result.records, [])
        self.assertEqual([k for k, _ in result.failures], [11, 12])

    def test_invalid_window(self):
        self.assertRaises(DomainError, rolling_backtest, self.panel, self.params.spec, 5)
        self.assertRaises(DomainError, rolling_backtest, self.panel, self.params.spec,
                          12, 14)
        self.assertRaises(DomainError, BacktestConfig, update="never")

    def test_extend_chain_state(self):
        params = nelson_siegel(sv=True, Sigma0=0.01 * np.eye(3))
        panel, _ = simulate_panel(params, T=10, N=5, seed=4)
        state = chain_state_from_params(panel.slice(0, 9), params, RngStream(1))
        extended = extend_chain_state(state, panel)
        self.assertEqual(extended.path.beta.shape, (11, 3))
        np.testing.assert_allclose(extended.path.beta[-1],
                                   state.path.beta[-1] + params.alpha)
        self.assertEqual(extended.path.H.shape, (10, 3, 3))
        self.assertEqual(extended.path.Sigma_filter.shape, (10, 3, 3))
        self.assertEqual(extended.Z.shape, (10, 5, 3))

    def test_extend_chain_state_gap(self):
        panel, _ = simulate_panel(self.params, T=10, N=5, seed=4)
        state = chain_state_from_params(panel.slice(0, 7), self.params, RngStream(1))
        extended = extend_chain_state(state, panel)
        self.assertEqual(extended.path.T, panel.T)
        np.testing.assert_allclose(extended.path.beta[-1],
                                   state.path.beta[-1] + 3 * self.params.alpha)
        self.assertRaises(DomainError, extend_chain_state, extended, panel.slice(0, 8))

    def test_run_chain_length_mismatch(self):
        state = chain_state_from_params(self.panel.slice(0, 11), self.params, RngStream(1))
        self.assertRaises(DomainError, run_chain, self.panel.slice(0, 12),
                          self.params.spec, self.config.gibbs, init=state)


if __name__ == "__main__":
    unittest.main()
