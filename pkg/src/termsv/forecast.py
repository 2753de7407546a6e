"""One-step-ahead forecasting.

Forecasts are made at an origin t from the posterior given y_1..y_t:
the log predictive density of y_{t+1}, point and variance forecasts,
Pearson residuals and portfolio Value-at-Risk. Two benchmarks are
provided: independent random walks for the prices and a homoscedastic
VAR(1) on factors extracted by per-date least squares.
"""

from collections import OrderedDict, namedtuple
from concurrent import futures

import numpy as np
import pandas as pd

from numpy.linalg import LinAlgError
from scipy.special import logsumexp
from scipy.stats import norm
from statsmodels.tsa.api import VAR

from .diagnostics import (LJUNG_BOX_LAGS, christoffersen_cc, christoffersen_ind,
                          hit_rate, kupiec_uc, ljung_box, rmsfe,
                          significance_mark)
from .exceptions import (DataError, DegenerateInputError, DomainError,
                         ForecastError, InsufficientDataError, TermSVError)
from .gibbs import (ChainState, GibbsConfig, StatePath, chain_state_from_params,
                    forward_filter_Sigma, gibbs_cycle, run_chain)
from .likelihood import REDUCED_GIBBS_FIXED
from .logger import silent
from .model import gamma_from_nu, loading_matrix
from .samplers import RngStream, cholesky, sample_precision_transition
from .validate import floats

__all__ = ["Portfolio", "ForecastRecord", "BacktestConfig", "BacktestResult",
           "BacktestSummary", "VarFit", "predictive_logdensity",
           "predictive_logdensity_bruteforce", "simulate_factor_forecast",
           "point_variance_forecast", "pearson_residuals", "var_forecast_mc",
           "extract_factors_ls", "fit_factor_var", "benchmark_var_forecast",
           "random_walk_forecast", "forecast_origin", "rolling_backtest",
           "summarize_backtest", "records_frame", "default_portfolios",
           "extend_chain_state", "cross_section_variance", "required_draws",
           "DEFAULT_LEVELS"]

DEFAULT_LEVELS = (0.01, 0.05, 0.10)

VarFit = namedtuple("VarFit", "mu Omega Sigma")
BacktestResult = namedtuple("BacktestResult", "records failures")
BacktestSummary = namedtuple("BacktestSummary", "log_pl accumulated rmsfe residuals var")


class Portfolio(object):
    """Fixed weights on the contracts of a panel."""

    def __init__(self, weights, name="portfolio"):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or not np.all(np.isfinite(weights)):
            raise DomainError("Portfolio weights must be a finite vector")
        if not np.any(weights != 0):
            raise DomainError("Portfolio needs at least one non-zero weight")

        self.weights = weights
        self.name = name

    @classmethod
    def equal(cls, N):
        return cls(np.full(N, 1.0 / N), "equal")

    @classmethod
    def bull_spread(cls, N, long=1, short=8):
        """Long the first contract, short the eighth."""
        if N < max(long, short):
            raise DomainError("Bull spread needs at least {0} contracts".format(max(long, short)))
        weights = np.zeros(N)
        weights[long - 1] = 1.0
        weights[short - 1] = -1.0
        return cls(weights, "bullspread")

    @classmethod
    def from_file(cls, path, name=None):
        """Reads comma or newline separated weights."""
        try:
            with open(path) as fd:
                weights = floats(fd.read().replace("\n", ","))
        except (IOError, OSError, ValueError) as err:
            raise DataError("Unable to read portfolio {0}: {1}".format(path, err))
        return cls(weights, name or "file")

    def check(self, N):
        if len(self.weights) != N:
            raise DomainError("Portfolio '{0}' has {1} weights for {2} contracts".format(
                self.name, len(self.weights), N))

    def returns(self, prices_from, prices_to):
        """Log return of the portfolio between two price vectors."""
        return float(self.weights @ (np.asarray(prices_to) - np.asarray(prices_from)))

    def __repr__(self):
        return "<Portfolio {0}>".format(self.name)


def _gaussian_logpdf(x, mean, cov):
    chol = cholesky(cov, "Predictive covariance")
    delta = (x - mean)[..., None]
    chol, delta = np.broadcast_arrays(chol, delta)
    solved = np.linalg.solve(chol, delta)[..., 0]
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
    N = x.shape[-1]
    return -0.5 * (N * np.log(2.0 * np.pi) + logdet + np.sum(solved ** 2, axis=-1))


def _next_innovation_cov(params, terminal, rng, size=None):
    """Draws of H_{t+1}^-1 given the end-of-sample state, or Sigma0
    without stochastic volatility."""
    if not params.spec.sv:
        cov = params.Sigma0
        return cov if size is None else np.broadcast_to(cov, (size,) + cov.shape)

    gamma = gamma_from_nu(params.nu, params.m)
    H = sample_precision_transition(terminal.H, params.nu, gamma, rng, size=size)
    return np.linalg.inv(H)


def _posterior_items(posterior, n_draws):
    if not posterior.draws or len(posterior.terminal) != len(posterior.draws):
        raise ForecastError("Forecasts need posterior draws with terminal states")

    items = list(zip(posterior.draws, posterior.terminal))
    if n_draws is not None and n_draws < len(items):
        step = len(items) / float(n_draws)
        items = [items[int(i * step)] for i in range(n_draws)]
    return items


def predictive_logdensity(posterior, y_next, tau_next, rng, n_draws=None):
    """Log predictive density of y_{t+1} with beta_{t+1} integrated out.

    Averages, over posterior draws, the Gaussian density of y_{t+1}
    given beta_t and a propagated H_{t+1}; the average is taken before
    the log.
    """
    items = _posterior_items(posterior, n_draws)
    y_next = np.asarray(y_next, dtype=float)
    logs = np.empty(len(items))

    for j, (params, terminal) in enumerate(items):
        Z = loading_matrix(tau_next, params.lambdas, params.m)
        Hinv = _next_innovation_cov(params, terminal, rng)
        cov = Z @ Hinv @ Z.T + params.sigma_y ** 2 * np.eye(len(y_next))
        logs[j] = _gaussian_logpdf(y_next, Z @ (params.alpha + terminal.beta), cov)

    return float(logsumexp(logs) - np.log(len(logs)))


def predictive_logdensity_bruteforce(posterior, y_next, tau_next, rng, n_draws=None):
    """Plain Monte Carlo version of :func:`predictive_logdensity` that
    also simulates beta_{t+1}."""
    items = _posterior_items(posterior, n_draws)
    y_next = np.asarray(y_next, dtype=float)
    N = len(y_next)
    logs = np.empty(len(items))

    for j, (params, terminal) in enumerate(items):
        Z = loading_matrix(tau_next, params.lambdas, params.m)
        Hinv = _next_innovation_cov(params, terminal, rng)
        beta = (params.alpha + terminal.beta
                + cholesky(Hinv, "Innovation covariance") @ rng.standard_normal(params.m))
        resid = y_next - Z @ beta
        s2 = params.sigma_y ** 2
        logs[j] = -0.5 * (N * np.log(2.0 * np.pi * s2) + resid @ resid / s2)

    return float(logsumexp(logs) - np.log(len(logs)))


def simulate_factor_forecast(panel, params, n_draws, rng, cycles=50, burnin=10):
    """Draws of beta_{T+1} given the parameters.

    End-of-sample states come from a Gibbs run that only redraws the
    factor and precision paths; each is propagated one period ahead.
    """
    state = chain_state_from_params(panel, params.replace(), rng)
    terminals = []
    for cycle in range(burnin + cycles):
        gibbs_cycle(state, panel, rng, REDUCED_GIBBS_FIXED, cycle)
        if cycle >= burnin:
            terminals.append(state.path.terminal())

    m = params.m
    counts = np.bincount(np.arange(n_draws) % cycles, minlength=cycles)
    draws = []
    for terminal, count in zip(terminals, counts):
        if not count:
            continue
        cov = _next_innovation_cov(params, terminal, rng, size=count)
        z = rng.standard_normal((count, m, 1))
        eta = (cholesky(cov, "Innovation covariance") @ z)[..., 0]
        draws.append(params.alpha + terminal.beta + eta)

    return np.concatenate(draws)


def point_variance_forecast(factor_draws, params, Z_next):
    """Mean and covariance of y_{t+1} from draws of beta_{t+1}."""
    factor_draws = np.atleast_2d(factor_draws)
    mean = Z_next @ factor_draws.mean(axis=0)
    if len(factor_draws) > 1:
        factor_cov = np.atleast_2d(np.cov(factor_draws, rowvar=False))
    else:
        factor_cov = np.zeros((params.m, params.m))
    cov = Z_next @ factor_cov @ Z_next.T + params.sigma_y ** 2 * np.eye(Z_next.shape[0])
    return mean, 0.5 * (cov + cov.T)


def pearson_residuals(mean, cov, realized):
    variance = np.diagonal(np.atleast_2d(cov))
    if not np.all(variance > 0):
        raise ForecastError("Forecast variances must be positive")
    return (np.asarray(realized, dtype=float) - mean) / np.sqrt(variance)


def required_draws(levels):
    """Smallest number of draws whose empirical quantiles resolve every
    level, at least 100 observations beyond the lowest one."""
    return int(np.ceil(100.0 / min(levels) - 1e-9))


def var_forecast_mc(factor_draws, params, Z_next, y_last, portfolio, levels, rng):
    """Monte Carlo VaR: empirical quantiles of simulated portfolio
    returns omega'(Z beta_{t+1} - y_t) + N(0, sigma_y^2 omega'omega)."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if not np.all((levels > 0) & (levels < 1)):
        raise DomainError("VaR levels must lie in (0, 1)")

    factor_draws = np.atleast_2d(factor_draws)
    n = len(factor_draws)
    needed = required_draws(levels)
    if n < needed:
        raise ForecastError("{0} draws cannot resolve the {1} tail, need {2}".format(
            n, levels.min(), needed))

    omega = portfolio.weights
    returns = (factor_draws @ Z_next.T - y_last) @ omega
    returns = returns + params.sigma_y * np.sqrt(omega @ omega) * rng.standard_normal(n)
    return OrderedDict(zip(levels.tolist(), np.quantile(returns, levels).tolist()))


def extract_factors_ls(panel, lambdas, m):
    """Per-date cross-section least squares factors."""
    Z = panel.loadings(lambdas, m)
    ranks = np.linalg.matrix_rank(Z)
    if np.any(ranks < m):
        bad = int(np.argmax(ranks < m))
        raise DataError("Loadings are rank deficient on {0}".format(panel.dates[bad].date()))

    ZtZ = np.einsum("tni,tnj->tij", Z, Z)
    Zty = np.einsum("tni,tn->ti", Z, panel.prices)
    return np.linalg.solve(ZtZ, Zty[..., None])[..., 0]


def cross_section_variance(panel, lambdas, m, factors):
    """Measurement variance estimated from least squares residuals."""
    Z = panel.loadings(lambdas, m)
    resid = panel.prices - np.einsum("tij,tj->ti", Z, factors)
    dof = panel.T * (panel.N - m)
    return float(np.sum(resid ** 2) / dof) if dof > 0 else 0.0


def fit_factor_var(factors):
    """Least squares VAR(1) beta_t = mu + Omega beta_{t-1} + xi_t."""
    factors = np.atleast_2d(np.asarray(factors, dtype=float))
    n, m = factors.shape
    if n < 2 * m + 1:
        raise InsufficientDataError("VAR fit needs at least {0} dates, got {1}".format(2 * m + 1, n))

    X = np.column_stack([np.ones(n - 1), factors[:-1]])
    if np.linalg.matrix_rank(X) < m + 1:
        raise DataError("Singular VAR design")

    # sigma_u divides by the residual degrees of freedom n - 1 - (m + 1)
    result = VAR(factors).fit(1, trend="c")
    Sigma = np.asarray(result.sigma_u)
    # params stacks the constant row above the lag coefficients
    mu = np.asarray(result.params)[0]
    return VarFit(mu, result.coefs[0], 0.5 * (Sigma + Sigma.T))


def benchmark_var_forecast(factors, Z_next, y_last, portfolio, levels,
                           sigma2=0.0, fit=None):
    """Gaussian VaR from the extracted-factor VAR benchmark.

    Returns ``(var, mean, sd)`` where ``var`` maps level to VaR.
    """
    factors = np.atleast_2d(np.asarray(factors, dtype=float))
    fit = fit or fit_factor_var(factors)
    omega = portfolio.weights
    N = Z_next.shape[0]

    predicted = fit.mu + fit.Omega @ factors[-1]
    mean = float(omega @ (Z_next @ predicted - y_last))
    cov = Z_next @ fit.Sigma @ Z_next.T + sigma2 * np.eye(N)
    sd = float(np.sqrt(max(omega @ cov @ omega, 0.0)))
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    var = OrderedDict(zip(levels.tolist(), (mean + sd * norm.ppf(levels)).tolist()))
    return var, mean, sd


def random_walk_forecast(prices):
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    if prices.shape[0] == 0:
        raise InsufficientDataError("Random walk forecast needs one observation")
    return prices[-1].copy()


class ForecastRecord(object):
    """Everything forecast at one origin and what was realized."""

    def __init__(self, origin_date, target_date, predictive_mean, predictive_cov,
                 log_pred_density, pearson, realized, rw_forecast, returns,
                 var_quantiles, hits, benchmark_var, benchmark_hits):
        self.origin_date = origin_date
        self.target_date = target_date
        self.predictive_mean = predictive_mean
        self.predictive_cov = predictive_cov
        self.log_pred_density = log_pred_density
        self.pearson = pearson
        self.realized = realized
        self.rw_forecast = rw_forecast
        self.returns = returns
        self.var_quantiles = var_quantiles
        self.hits = hits
        self.benchmark_var = benchmark_var
        self.benchmark_hits = benchmark_hits

    @property
    def errors(self):
        return self.realized - self.predictive_mean

    @property
    def rw_errors(self):
        return self.realized - self.rw_forecast

    def to_row(self):
        """Flat dict of all scalars; the covariance is omitted."""
        row = OrderedDict([
            ("origin_date", str(self.origin_date.date())),
            ("target_date", str(self.target_date.date())),
            ("log_pd", self.log_pred_density),
        ])
        sd = np.sqrt(np.diagonal(self.predictive_cov))
        for i in range(len(self.realized)):
            row["mean_{0}".format(i + 1)] = self.predictive_mean[i]
            row["sd_{0}".format(i + 1)] = sd[i]
            row["pearson_{0}".format(i + 1)] = self.pearson[i]
            row["realized_{0}".format(i + 1)] = self.realized[i]
            row["rw_{0}".format(i + 1)] = self.rw_forecast[i]
        for name, ret in self.returns.items():
            row["return_{0}".format(name)] = ret
            for level, value in self.var_quantiles[name].items():
                row["var_{0}_{1:g}".format(name, level)] = value
                row["hit_{0}_{1:g}".format(name, level)] = int(self.hits[name][level])
                row["bvar_{0}_{1:g}".format(name, level)] = self.benchmark_var[name][level]
                row["bhit_{0}_{1:g}".format(name, level)] = int(self.benchmark_hits[name][level])
        return row


class BacktestConfig(object):
    """Settings of a rolling backtest.

    ``update`` is ``warm`` (short chains started from the previous
    origin's final state) or ``full`` (a fresh chain per origin, which
    may run on ``threads`` workers).
    """

    def __init__(self, update="warm", gibbs=None, warm_cycles=500, reduced_cycles=50,
                 reduced_burnin=10, forecast_draws=10000, levels=DEFAULT_LEVELS,
                 portfolios=None, seed=0, threads=1, benchmark_lambdas=None,
                 density_draws=None):
        if update not in ("warm", "full"):
            raise DomainError("Unknown backtest update rule: {0}".format(update))
        self.update = update
        self.gibbs = gibbs or GibbsConfig()
        self.warm_cycles = int(warm_cycles)
        self.reduced_cycles = int(reduced_cycles)
        self.reduced_burnin = int(reduced_burnin)
        self.forecast_draws = int(forecast_draws)
        self.levels = tuple(float(v) for v in levels)
        self.portfolios = portfolios
        self.seed = int(seed)
        self.threads = max(int(threads), 1)
        self.benchmark_lambdas = benchmark_lambdas
        self.density_draws = density_draws

    def warm_gibbs(self):
        n = max(self.warm_cycles, 2)
        return self.gibbs.replace(n_iterations=n, n_burnin=n // 5,
                                  adapt_during_burnin=False)


# numerical failures of a single origin, recorded instead of aborting the run
ORIGIN_ERRORS = (TermSVError, LinAlgError, FloatingPointError, ValueError)

def default_portfolios(N):
    portfolios = [Portfolio.equal(N)]
    if N >= 8:
        portfolios.append(Portfolio.bull_spread(N))
    return portfolios


def forecast_origin(panel, k, posterior, config, portfolios, rng):
    """Forecasts y_k from the posterior given y_0..y_{k-1}."""
    prefix = panel.slice(0, k)
    params = posterior.posterior_mean()
    m = params.m
    tau_next = panel.maturities[k]
    y_last, y_next = panel.prices[k - 1], panel.prices[k]

    n_draws = max(config.forecast_draws, required_draws(config.levels))
    draws = simulate_factor_forecast(prefix, params, n_draws,
                                     rng.substream(0), config.reduced_cycles,
                                     config.reduced_burnin)
    Z_next = loading_matrix(tau_next, params.lambdas, m)
    mean, cov = point_variance_forecast(draws, params, Z_next)
    log_pd = predictive_logdensity(posterior, y_next, tau_next, rng.substream(1),
                                   config.density_draws)

    bench_lambdas = config.benchmark_lambdas or params.lambdas
    factors = extract_factors_ls(prefix, bench_lambdas, m)
    sigma2 = cross_section_variance(prefix, bench_lambdas, m, factors)
    fit = fit_factor_var(factors)
    Z_bench = loading_matrix(tau_next, bench_lambdas, m)

    returns, quantiles, hits, bench, bench_hits = {}, {}, {}, {}, {}
    var_rng = rng.substream(2)
    for portfolio in portfolios:
        name = portfolio.name
        ret = portfolio.returns(y_last, y_next)
        returns[name] = ret
        quantiles[name] = var_forecast_mc(draws, params, Z_next, y_last, portfolio,
                                          config.levels, var_rng)
        hits[name] = OrderedDict((lv, ret <= q) for lv, q in quantiles[name].items())
        bench[name] = benchmark_var_forecast(factors, Z_bench, y_last, portfolio,
                                             config.levels, sigma2, fit)[0]
        bench_hits[name] = OrderedDict((lv, ret <= q) for lv, q in bench[name].items())

    return ForecastRecord(panel.dates[k - 1], panel.dates[k], mean, cov, log_pd,
                          pearson_residuals(mean, cov, y_next), y_next.copy(),
                          random_walk_forecast(prefix.prices), returns, quantiles,
                          hits, bench, bench_hits)


def extend_chain_state(state, panel):
    """Grows a chain state to the dates of ``panel``.

    New factor rows follow the drift from the last stored one and new
    precisions repeat the last one, however many dates are missing.
    """
    params = state.params
    path = state.path
    n_new = panel.T - path.T
    if n_new < 0:
        raise DomainError("Chain state covers {0} dates, panel only {1}".format(
            path.T, panel.T))

    steps = np.arange(1, n_new + 1)[:, None]
    beta = np.vstack([path.beta, path.beta[-1] + steps * params.alpha])
    H = None if path.H is None else np.concatenate([path.H] + [path.H[-1:]] * n_new)
    extended = StatePath(beta, H)
    if params.spec.sv:
        extended.Sigma_filter = forward_filter_Sigma(beta, params)

    new = ChainState(params.replace(), extended,
                     panel.loadings(params.lambdas, params.m), state.steps)
    return new


def rolling_backtest(panel, spec, start, stop=None, config=None, logger=None):
    """Forecasts y_k for every k in [start, stop) from the data before k.

    Origins that fail are logged and skipped; their index and error are
    returned in ``failures``.
    """
    config = config or BacktestConfig()
    logger = logger or silent("backtest")
    stop = panel.T if stop is None else stop
    if not 2 * spec.m + 2 <= start < stop <= panel.T:
        raise DomainError("Backtest window {0}:{1} must satisfy {2} <= start < stop "
                          "<= {3}".format(start, stop, 2 * spec.m + 2, panel.T))

    portfolios = config.portfolios or default_portfolios(panel.N)
    for portfolio in portfolios:
        portfolio.check(panel.N)

    chain_logger = logger.new_module("chain")

    def origin(k, init=None):
        prefix = panel.slice(0, k)
        gibbs = config.gibbs if init is None else config.warm_gibbs()
        posterior = run_chain(prefix, spec, gibbs.replace(stream_id=("origin", k)),
                              init=init, logger=chain_logger)
        record = forecast_origin(panel, k, posterior, config, portfolios,
                                 RngStream(config.seed, ("forecast", k)))
        return posterior, record

    records, failures = [], []

    def record_failure(k, err):
        logger.warning("Skipping origin {0}: {1}", k, err)
        failures.append((k, str(err)))

    if config.update == "warm":
        state = None
        for k in range(start, stop):
            try:
                init = None if state is None else extend_chain_state(state, panel.slice(0, k))
                posterior, record = origin(k, init)
            except ORIGIN_ERRORS as err:
                # cold start after a failure
                record_failure(k, err)
                state = None
                continue
            state = posterior.final_state
            records.append(record)
            logger.info("Origin {0} ({1}): log predictive density {2:.4f}",
                        k, record.target_date.date(), record.log_pred_density)
    else:
        def run(k):
            try:
                return k, origin(k)[1], None
            except ORIGIN_ERRORS as err:
                return k, None, err

        with futures.ThreadPoolExecutor(max_workers=config.threads) as executor:
            for k, record, err in executor.map(run, range(start, stop)):
                if err is not None:
                    record_failure(k, err)
                else:
                    records.append(record)

    return BacktestResult(records, failures)


def _coverage_rows(source, name, level, hits):
    uc = kupiec_uc(hits, level)
    try:
        ind = christoffersen_ind(hits)
        cc = christoffersen_cc(hits, level)
    except InsufficientDataError:
        # a single origin has no transitions
        ind = cc = uc._replace(statistic=np.nan, p_value=np.nan)
    return OrderedDict([
        ("portfolio", name), ("level", level), ("source", source),
        ("hit_rate", hit_rate(hits)),
        ("uc_stat", uc.statistic), ("uc_p", uc.p_value), ("uc_mark", significance_mark(uc.p_value)),
        ("ind_stat", ind.statistic), ("ind_p", ind.p_value), ("ind_mark", significance_mark(ind.p_value)),
        ("cc_stat", cc.statistic), ("cc_p", cc.p_value), ("cc_mark", significance_mark(cc.p_value)),
    ])


def summarize_backtest(records, reference=None):
    """Tables of a backtest: log predictive likelihood, its accumulated
    difference to a reference run (a mapping from target date to log
    predictive density), forecast errors by contract bucket
    for the model and the random walk, Pearson residual moments with
    Ljung-Box tests, and VaR coverage tests for the model and the VAR
    benchmark."""
    if not records:
        raise InsufficientDataError("No forecast records to summarize")

    log_pl = pd.DataFrame({
        "target_date": [r.target_date for r in records],
        "log_pd": [r.log_pred_density for r in records],
    })
    log_pl["cumulative"] = log_pl["log_pd"].cumsum()

    accumulated = None
    if reference is not None:
        ref = dict(reference)
        common = [r for r in records if r.target_date in ref]
        diffs = np.array([r.log_pred_density - ref[r.target_date] for r in common])
        accumulated = pd.DataFrame({
            "date": [common[0].origin_date] + [r.target_date for r in common],
            "difference": np.concatenate([[0.0], np.cumsum(diffs)]),
        }) if common else pd.DataFrame(columns=["date", "difference"])

    model = rmsfe(np.array([r.errors for r in records]))
    walk = rmsfe(np.array([r.rw_errors for r in records]))
    errors = pd.DataFrame({"bucket": list(model.keys()),
                           "model": list(model.values()),
                           "random_walk": [walk[k] for k in model]})

    pearson = np.array([r.pearson for r in records])
    rows = []
    for i in range(pearson.shape[1]):
        try:
            lb = ljung_box(pearson[:, i], LJUNG_BOX_LAGS)
            lb_stat, lb_p = lb.statistic, lb.p_value
        except (InsufficientDataError, DegenerateInputError):
            lb_stat = lb_p = np.nan
        rows.append(OrderedDict([
            ("contract", i + 1), ("mean", pearson[:, i].mean()),
            ("sd", pearson[:, i].std(ddof=1) if len(pearson) > 1 else np.nan),
            ("lb_stat", lb_stat), ("lb_p", lb_p),
            ("lb_mark", significance_mark(lb_p) if np.isfinite(lb_p) else ""),
        ]))
    residuals = pd.DataFrame(rows)

    coverage = []
    first = records[0]
    for name in first.returns:
        for level in first.var_quantiles[name]:
            hits = [r.hits[name][level] for r in records]
            coverage.append(_coverage_rows("model", name, level, hits))
            bhits = [r.benchmark_hits[name][level] for r in records]
            coverage.append(_coverage_rows("benchmark", name, level, bhits))

    return BacktestSummary(log_pl, accumulated, errors, residuals, pd.DataFrame(coverage))


def records_frame(records):
    """One row per forecast record, as written to forecasts.csv."""
    return pd.DataFrame([record.to_row() for record in records])
