"""Slow reference implementations.

These recompute quantities of the main modules along independent
routes: a Kalman filter and smoother for the linear Gaussian model,
dense Gaussian algebra, brute force integrals over the Wishart
precision and a scalar backward sampler. They use their own loadings
and never call the banded or collapsed code they are compared with.
"""

from collections import namedtuple

import numpy as np

from scipy import integrate
from scipy.optimize import minimize_scalar
from scipy.stats import chi2, gamma as gamma_dist, multivariate_normal, norm, wishart

from .exceptions import NumericalError

__all__ = ["OracleReport", "KalmanResult", "GridPosterior", "compare",
           "kalman_loglik_smoother", "kalman_for_params",
           "dense_gaussian_moments", "mc_integrate_t_density",
           "quadrature_1d", "grid_posterior_lambda",
           "scalar_backward_sample_H", "curvature_peak", "self_check"]

KalmanResult = namedtuple("KalmanResult", "loglik means covs")
GridPosterior = namedtuple("GridPosterior", "grid density mean")

_OracleReport = namedtuple("OracleReport", "quantity oracle artifact tolerance passed relative")


class OracleReport(_OracleReport):
    def to_row(self):
        return self._asdict()


def compare(quantity, oracle, artifact, tolerance, relative=False):
    """Builds a report; relative tolerances are scaled by |oracle|."""
    oracle, artifact = float(oracle), float(artifact)
    limit = tolerance * abs(oracle) if relative else tolerance
    passed = bool(abs(oracle - artifact) <= limit)
    return OracleReport(quantity, oracle, artifact, float(tolerance), passed, relative)


def _loadings(tau, lambdas, m):
    tau = np.asarray(tau, dtype=float)
    x = lambdas[0] * tau
    slope = (1.0 - np.exp(-x)) / x
    columns = [np.ones_like(tau), slope, slope - np.exp(-x)]
    if m == 4:
        x2 = lambdas[1] * tau
        columns.append((1.0 - np.exp(-x2)) / x2 - np.exp(-x2))
    return np.stack(columns, axis=-1)


def curvature_peak(lam):
    """Maturity in days where the curvature loading peaks."""
    curvature = lambda tau: -_loadings(np.array([tau]), [lam], 3)[0, 2]
    return minimize_scalar(curvature, bounds=(1.0, 10.0 / lam), method="bounded",
                           options={"xatol": 1e-6}).x


def kalman_loglik_smoother(prices, Z, alpha, Q, sigma2, beta0, beta0_cov=None):
    """Prediction error decomposition likelihood and Rauch-Tung-Striebel
    smoothed moments of beta_1..beta_T for the random walk with drift
    beta_t = alpha + beta_{t-1} + eta_t, eta_t ~ N(0, Q_t).

    ``beta0_cov`` None conditions on ``beta0``; otherwise beta_0 is
    N(beta0, beta0_cov).
    """
    prices = np.asarray(prices, dtype=float)
    T, N = prices.shape
    m = Z.shape[-1]
    Q = np.broadcast_to(np.asarray(Q, dtype=float), (T, m, m))

    a = np.asarray(beta0, dtype=float).copy()
    P = np.zeros((m, m)) if beta0_cov is None else np.asarray(beta0_cov, dtype=float)
    pred_a, pred_P = np.empty((T, m)), np.empty((T, m, m))
    filt_a, filt_P = np.empty((T, m)), np.empty((T, m, m))
    loglik = 0.0

    for t in range(T):
        a = a + alpha
        P = P + Q[t]
        pred_a[t], pred_P[t] = a, P

        F = Z[t] @ P @ Z[t].T + sigma2 * np.eye(N)
        v = prices[t] - Z[t] @ a
        try:
            loglik += multivariate_normal.logpdf(v, cov=F)
            K = np.linalg.solve(F, Z[t] @ P).T
        except (np.linalg.LinAlgError, ValueError) as err:
            raise NumericalError("Kalman prediction covariance at t={0}: {1}".format(t + 1, err))

        a = a + K @ v
        P = P - K @ Z[t] @ P
        P = 0.5 * (P + P.T)
        filt_a[t], filt_P[t] = a, P

    means, covs = filt_a.copy(), filt_P.copy()
    for t in range(T - 2, -1, -1):
        J = np.linalg.solve(pred_P[t + 1], filt_P[t]).T
        means[t] = filt_a[t] + J @ (means[t + 1] - pred_a[t + 1])
        covs[t] = filt_P[t] + J @ (covs[t + 1] - pred_P[t + 1]) @ J.T

    return KalmanResult(float(loglik), means, covs)


def kalman_for_params(panel, params, H=None, integrate_beta0=False, beta0_var=1000.0):
    """Runs :func:`kalman_loglik_smoother` for a panel and a parameter
    bundle. ``H`` gives innovation precisions; without it Sigma0 is the
    innovation covariance."""
    m = params.m
    Z = _loadings(panel.maturities, params.lambdas, m)
    Q = params.Sigma0 if H is None else np.linalg.inv(H)
    if integrate_beta0:
        return kalman_loglik_smoother(panel.prices, Z, params.alpha, Q,
                                      params.sigma_y ** 2, np.zeros(m),
                                      beta0_var * np.eye(m))
    return kalman_loglik_smoother(panel.prices, Z, params.alpha, Q,
                                  params.sigma_y ** 2, params.beta0)


def dense_gaussian_moments(panel, params, H=None):
    """Posterior mean and covariance of the stacked beta_1..beta_T given
    beta_0, from the dense joint precision matrix."""
    m = params.m
    T = panel.T
    Z = _loadings(panel.maturities, params.lambdas, m)
    Hs = np.broadcast_to(np.linalg.inv(params.Sigma0) if H is None else H, (T, m, m))
    s2 = params.sigma_y ** 2

    # increments eta = D beta - c with D block bidiagonal
    D = np.eye(T * m)
    for t in range(1, T):
        D[t * m:(t + 1) * m, (t - 1) * m:t * m] = -np.eye(m)
    c = np.tile(params.alpha, T)
    c[:m] += params.beta0

    prior = np.zeros((T * m, T * m))
    data = np.zeros((T * m, T * m))
    linear = np.zeros(T * m)
    for t in range(T):
        block = slice(t * m, (t + 1) * m)
        prior[block, block] = Hs[t]
        data[block, block] = Z[t].T @ Z[t] / s2
        linear[block] = Z[t].T @ panel.prices[t] / s2

    precision = D.T @ prior @ D + data
    cov = np.linalg.inv(precision)
    mean = cov @ (linear + D.T @ prior @ c)
    return mean.reshape(T, m), 0.5 * (cov + cov.T)


def _generator(rng):
    return getattr(rng, "generator", rng)


def mc_integrate_t_density(x, location, Sigma_prev, nu, gamma, n_draws, rng):
    """Brute force density of beta_t given the past: the Gaussian
    density with precision H averaged over H ~ W(nu, (gamma Sigma)^-1).

    Returns ``(density, standard_error)``.
    """
    Sigma_prev = np.atleast_2d(np.asarray(Sigma_prev, dtype=float))
    m = Sigma_prev.shape[0]
    scale = np.linalg.inv(gamma * Sigma_prev)
    H = wishart(df=nu, scale=scale).rvs(size=n_draws, random_state=_generator(rng))
    H = np.reshape(H, (n_draws, m, m))

    delta = np.atleast_1d(np.asarray(x, dtype=float) - location)
    logdet = np.linalg.slogdet(H)[1]
    quad = np.einsum("i,nij,j->n", delta, H, delta)
    values = np.exp(0.5 * logdet - 0.5 * m * np.log(2.0 * np.pi) - 0.5 * quad)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_draws))


def quadrature_1d(x, location, sigma_prev, nu, gamma):
    """Scalar version of :func:`mc_integrate_t_density` by adaptive
    quadrature over the Gamma distributed precision. Returns
    ``(density, abserr)``."""
    law = gamma_dist(a=0.5 * nu, scale=2.0 / (gamma * sigma_prev))
    integrand = lambda h: norm.pdf(x, loc=location, scale=1.0 / np.sqrt(h)) * law.pdf(h)
    lower, upper = law.ppf(1e-14), law.isf(1e-14)
    value, abserr = integrate.quad(integrand, lower, upper, points=[law.mean()],
                                   epsabs=0.0, epsrel=1e-10, limit=200)
    return float(value), float(abserr)


def grid_posterior_lambda(panel, params, grid, beta0_var=1000.0):
    """Posterior of a single decay rate on a grid given the other
    parameters of a model without stochastic volatility.

    The factor path including beta_0 is integrated out by the Kalman
    filter; the prior is flat in ln(lambda). The density is normalised
    with the trapezoid rule.
    """
    grid = np.asarray(grid, dtype=float)
    logpost = np.array([
        kalman_for_params(panel, params.replace(lambdas=(lam,)), integrate_beta0=True,
                          beta0_var=beta0_var).loglik - np.log(lam)
        for lam in grid
    ])
    density = np.exp(logpost - logpost.max())
    density /= integrate.trapezoid(density, grid)
    return GridPosterior(grid, density, float(integrate.trapezoid(grid * density, grid)))


def scalar_backward_sample_H(Sigma_filter, nu, gamma, rng, size=1):
    """Backward sampling of a scalar precision path: H_T is
    Gamma((nu + 1)/2, scale 2/Sigma_T), then H_t = gamma H_{t+1} + chi2_1/Sigma_t.
    Returns an array (size, T)."""
    Sigma_filter = np.asarray(Sigma_filter, dtype=float).reshape(-1)
    T = len(Sigma_filter)
    generator = _generator(rng)

    H = np.empty((size, T))
    H[:, -1] = gamma_dist(a=0.5 * (nu + 1.0), scale=2.0 / Sigma_filter[-1]).rvs(
        size=size, random_state=generator)
    for t in range(T - 2, -1, -1):
        shock = chi2(df=1).rvs(size=size, random_state=generator) / Sigma_filter[t]
        H[:, t] = gamma * H[:, t + 1] + shock
    return H


def _random_params(spec, rng):
    from .model import Params

    m = spec.m
    lambdas = (0.0036, 0.0158)[:spec.n_lambda]
    A = rng.standard_normal((m, m)) * 0.02
    Sigma0 = A @ A.T + 1e-4 * np.eye(m)
    return Params(spec, lambdas, 0.003 + 0.01 * rng.uniform(),
                  alpha=0.001 * rng.standard_normal(m),
                  nu=m + 10.0 if spec.sv else None,
                  beta0=rng.standard_normal(m), Sigma0=Sigma0)


def self_check(seed=0, n_instances=5, mc_draws=200000, gibbs_iterations=3000):
    """Runs every oracle comparison at reduced scale and returns the
    list of :class:`OracleReport`."""
    from .data import simulate_panel
    from .gibbs import (GibbsConfig, backward_sample_H, integrated_loglik_y_given_H,
                        run_chain)
    from .likelihood import loglik_no_sv
    from .model import ModelSpec, gamma_from_nu, loading_matrix
    from .samplers import RngStream, mvt_logpdf, sample_wishart

    rng = RngStream(seed, "self-check")
    reports = []

    grid = np.arange(1.0, 2001.0, 0.5)
    for lam in (0.0036, 0.0158):
        peak = grid[np.argmax(loading_matrix(grid, [lam], 3)[:, 2])]
        reports.append(compare("curvature peak lambda={0}".format(lam),
                               curvature_peak(lam), peak, 1.0))

    reports.append(compare("gamma nu=27.72 m=4", 0.958, gamma_from_nu(27.72, 4), 5e-4))
    reports.append(compare("gamma nu=21.75 m=3", 0.947, gamma_from_nu(21.75, 3), 5e-4))

    for i in range(n_instances):
        spec = ModelSpec(3 + i % 2, False)
        params = _random_params(spec, rng)
        panel, _ = simulate_panel(params, T=20 + 10 * i, N=6, seed=seed + i)
        reports.append(compare("loglik_no_sv instance {0}".format(i),
                               kalman_for_params(panel, params).loglik,
                               loglik_no_sv(panel, params), 1e-9, True))

        H = sample_wishart(spec.m + 5.0, np.linalg.inv(params.Sigma0) / (spec.m + 5.0),
                           rng, size=panel.T)
        reports.append(compare("loglik given H instance {0}".format(i),
                               kalman_for_params(panel, params, H=H, integrate_beta0=True).loglik,
                               integrated_loglik_y_given_H(panel, params, H), 1e-9, True))

    nu, gamma = 12.0, gamma_from_nu(12.0, 1)
    df = nu - 1 + 1.0
    value = quadrature_1d(0.03, 0.01, 0.002, nu, gamma)[0]
    artifact = np.exp(mvt_logpdf([0.03], [0.01], [[gamma * 0.002 / df]], df))
    reports.append(compare("t density m=1 quadrature", value, float(artifact), 1e-6, True))

    Sigma = np.array([[0.004, 0.001], [0.001, 0.002]])
    x, loc = np.array([0.02, -0.03]), np.zeros(2)
    gamma2 = gamma_from_nu(nu, 2)
    density, se = mc_integrate_t_density(x, loc, Sigma, nu, gamma2, mc_draws, rng)
    df2 = nu - 2 + 1.0
    artifact = np.exp(mvt_logpdf(x, loc, gamma2 * Sigma / df2, df2))
    reports.append(compare("t density m=2 Monte Carlo", density, float(artifact),
                           max(4.0 * se / density, 0.01), True))

    Sigma_filter = np.array([0.5, 0.8, 0.6, 0.9])
    draws = 20000
    oracle = scalar_backward_sample_H(Sigma_filter, nu, gamma, rng, size=draws)[:, 0]
    artifact = np.array([backward_sample_H(Sigma_filter.reshape(-1, 1, 1), nu, rng)[0, 0, 0]
                         for _ in range(draws)])
    tolerance = 4.0 * np.sqrt(oracle.var() / draws + artifact.var() / draws)
    reports.append(compare("backward sampler mean H_1", oracle.mean(), artifact.mean(),
                           tolerance))

    spec = ModelSpec(3, False)
    params = _random_params(spec, rng).replace(lambdas=(0.01,), sigma_y=0.02)
    panel, _ = simulate_panel(params, T=5, N=3, seed=seed)
    posterior = grid_posterior_lambda(panel, params, np.geomspace(1e-5, 1.0, 2000))
    config = GibbsConfig(n_iterations=gibbs_iterations, n_burnin=gibbs_iterations // 10,
                         seed=seed, fixed=("alpha", "sigma_y", "Sigma0"))
    sample = run_chain(panel, spec, config, init=params)
    values = np.array([p.lambdas[0] for p in sample.draws])
    ess = sample.ess().get("lambda1", np.nan)
    ess = max(ess, 1.0) if np.isfinite(ess) else float(len(values))
    mcse = values.std(ddof=1) / np.sqrt(ess)
    reports.append(compare("collapsed Gibbs lambda mean", posterior.mean, values.mean(),
                           3.0 * mcse + 1e-3 * posterior.mean))

    return reports
