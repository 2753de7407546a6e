"""Marginal likelihood of the prices and the deviance information
criterion.

Without stochastic volatility the model is linear and Gaussian and the
likelihood is available in closed form. With stochastic volatility it
is estimated by a Rao-Blackwellised particle filter: the precision path
is integrated out analytically, so every particle only carries its last
factor vector and its forward filter scale, and the factors are
proposed from Student t approximations of their smoothed marginals.
"""

from collections import namedtuple
from concurrent import futures

import numpy as np

from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from .exceptions import (DomainError, EvaluationError, ParticleCollapseError,
                         TermSVError)
from .gibbs import (chain_state_from_params, gibbs_cycle, precision_path,
                    state_posterior)
from .logger import silent
from .model import gamma_from_nu
from .samplers import RngStream, mvt_logpdf, sample_mvt

__all__ = ["SmcConfig", "ProposalSequence", "SmcResult", "DicResult",
           "loglik_no_sv", "reduced_gibbs_moments", "transition_logpdf",
           "smc_loglik", "make_smc_evaluator", "make_evaluator", "dic",
           "REDUCED_GIBBS_FIXED"]

#: Blocks held fixed by the parameter-fixed Gibbs runs
REDUCED_GIBBS_FIXED = frozenset(["lambda", "nu", "alpha", "sigma_y",
                                 "Sigma0", "beta0"])

ProposalSequence = namedtuple("ProposalSequence", "location scale df")
SmcResult = namedtuple("SmcResult", "loglik contributions replicate_sd "
                                    "n_particles seed ess")
DicResult = namedtuple("DicResult", "dic p_d loglik_at_mean mean_loglik n_eval")


class SmcConfig(object):
    """Particle filter settings.

    ``resample`` is ``always`` (multinomial resampling every period) or
    ``adaptive`` (only when the effective sample size of the weights
    falls below half the particle count).
    """

    def __init__(self, n_particles=10000, proposal_df=4.0, reduced_gibbs_cycles=50,
                 reduced_gibbs_burnin=10, resample="always", seed=0,
                 replicates=1, threads=1):
        self.n_particles = int(n_particles)
        self.proposal_df = float(proposal_df)
        self.reduced_gibbs_cycles = int(reduced_gibbs_cycles)
        self.reduced_gibbs_burnin = int(reduced_gibbs_burnin)
        self.resample = resample
        self.seed = int(seed)
        self.replicates = int(replicates)
        self.threads = max(int(threads), 1)

        if self.n_particles < 100:
            raise DomainError("Need at least 100 particles, got {0}".format(self.n_particles))
        if not self.proposal_df > 2:
            raise DomainError("Proposal degrees of freedom must exceed 2")
        if self.resample not in ("always", "adaptive"):
            raise DomainError("Unknown resampling rule: {0}".format(self.resample))
        if self.reduced_gibbs_cycles < 1 or self.replicates < 1:
            raise DomainError("Cycles and replicates must be positive")

    def replace(self, **kwargs):
        fields = dict(vars(self))
        fields.update(kwargs)
        return SmcConfig(**fields)


def loglik_no_sv(panel, params):
    """Exact log likelihood of a model without stochastic volatility,
    conditional on the initial factors in ``params``."""
    if params.spec.sv:
        raise DomainError("loglik_no_sv needs a model without stochastic volatility")

    H, logdet = precision_path(params, None, panel.T)
    return state_posterior(panel, params, H, logdet, fixed_beta0=True)[1]


def _floor_covariances(cov):
    m = cov.shape[-1]
    trace = np.trace(cov, axis1=-2, axis2=-1)
    floor = np.maximum(1e-10 * trace / m, 1e-12)
    values, vectors = np.linalg.eigh(cov)
    values = np.maximum(values, floor[:, None])
    out = np.einsum("tij,tj,tkj->tik", vectors, values, vectors)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def reduced_gibbs_moments(panel, params, cycles, rng, df=4.0, burnin=0):
    """Per-period posterior mean and covariance of the factors given
    the parameters, from a Gibbs run that only redraws the factor and
    precision paths."""
    state = chain_state_from_params(panel, params.replace(), rng)
    T, m = panel.T, params.m
    total = np.zeros((T, m))
    outer = np.zeros((T, m, m))

    for cycle in range(burnin + cycles):
        gibbs_cycle(state, panel, rng, REDUCED_GIBBS_FIXED, cycle)
        if cycle >= burnin:
            beta = state.path.beta[1:]
            total += beta
            outer += beta[:, :, None] * beta[:, None, :]

    mean = total / cycles
    cov = outer / cycles - mean[:, :, None] * mean[:, None, :]
    return ProposalSequence(mean, _floor_covariances(cov), float(df))


def transition_logpdf(beta, beta_prev, Sigma_prev, params):
    """Log density of beta_t given beta_{t-1} and, with stochastic
    volatility, the forward filter scale Sigma_{t-1}, with H_t
    integrated out. Broadcasts over leading particle dimensions."""
    if not params.spec.sv:
        return multivariate_normal.logpdf(beta - beta_prev - params.alpha,
                                          cov=params.Sigma0)

    m = params.m
    df = params.nu - m + 1.0
    gamma = gamma_from_nu(params.nu, m)
    return mvt_logpdf(beta, beta_prev + params.alpha, gamma * Sigma_prev / df, df)


def _smc_run(panel, params, proposals, config, rng, logger):
    L = config.n_particles
    T, N = panel.T, panel.N
    m = params.m
    sv = params.spec.sv
    Z = panel.loadings(params.lambdas, m)
    s2 = params.sigma_y ** 2
    if sv:
        gamma = gamma_from_nu(params.nu, m)

    beta_prev = np.broadcast_to(params.beta0, (L, m)).copy()
    Sigma_prev = np.broadcast_to(params.Sigma0, (L, m, m)).copy() if sv else None
    log_weights = np.full(L, -np.log(L))
    contributions = np.empty(T)
    ess = np.empty(T)

    for t in range(T):
        beta = sample_mvt(proposals.location[t], proposals.scale[t],
                          proposals.df, rng, size=L)
        resid = panel.prices[t] - beta @ Z[t].T
        logw = (-0.5 * N * np.log(2.0 * np.pi * s2)
                - 0.5 * np.sum(resid ** 2, axis=1) / s2
                + transition_logpdf(beta, beta_prev, Sigma_prev, params)
                - mvt_logpdf(beta, proposals.location[t], proposals.scale[t], proposals.df))

        total = log_weights + logw
        increment = logsumexp(total)
        if not np.isfinite(increment):
            raise ParticleCollapseError(t + 1)

        contributions[t] = increment
        log_weights = total - increment
        weights = np.exp(log_weights)
        ess[t] = 1.0 / np.sum(weights ** 2)

        if sv:
            eta = beta - beta_prev - params.alpha
            Sigma_prev = eta[:, :, None] * eta[:, None, :] + gamma * Sigma_prev
        beta_prev = beta

        if config.resample == "always" or ess[t] < 0.5 * L:
            index = rng.choice(L, size=L, p=weights / weights.sum())
            beta_prev = beta_prev[index]
            if sv:
                Sigma_prev = Sigma_prev[index]
            log_weights = np.full(L, -np.log(L))

        if logger.enabled("debug") and (t + 1) % 100 == 0:
            logger.debug("t={0}: ESS {1:.0f} of {2}", t + 1, ess[t], L)

    return contributions, ess


def smc_loglik(panel, params, proposals, config=None, rng=None, logger=None):
    """Particle filter estimate of the log likelihood.

    With ``config.replicates`` > 1 independent runs are made on distinct
    substreams, through a thread pool of ``config.threads`` workers; the
    reported estimate is their average and ``replicate_sd`` their
    standard deviation.
    """
    config = config or SmcConfig()
    logger = logger or silent("smc")
    rng = rng if rng is not None else RngStream(config.seed)

    if config.replicates == 1:
        contributions, ess = _smc_run(panel, params, proposals, config, rng, logger)
        return SmcResult(float(np.sum(contributions)), contributions, None,
                         config.n_particles, config.seed, ess)

    def replicate(r):
        return _smc_run(panel, params, proposals, config, rng.substream(r), logger)

    with futures.ThreadPoolExecutor(max_workers=config.threads) as executor:
        runs = list(executor.map(replicate, range(config.replicates)))

    totals = np.array([np.sum(c) for c, _ in runs])
    logger.info("{0} replicates with {1} particles: mean {2:.4f}, sd {3:.4g}",
                config.replicates, config.n_particles, totals.mean(), totals.std(ddof=1))
    return SmcResult(float(totals.mean()), np.mean([c for c, _ in runs], axis=0),
                     float(totals.std(ddof=1)), config.n_particles, config.seed,
                     runs[0][1])


def make_smc_evaluator(config=None, logger=None):
    """A likelihood evaluator ``f(panel, params, index)`` for stochastic
    volatility models. Evaluation ``index`` gets its own random streams,
    so results do not depend on evaluation order."""
    config = config or SmcConfig()

    def evaluator(panel, params, index=0):
        stream = RngStream(config.seed, ("eval", index))
        proposals = reduced_gibbs_moments(panel, params, config.reduced_gibbs_cycles,
                                          stream.substream(0), config.proposal_df,
                                          config.reduced_gibbs_burnin)
        single = config.replace(replicates=1)
        return smc_loglik(panel, params, proposals, single, stream.substream(1),
                          logger).loglik

    return evaluator


def make_evaluator(spec, config=None, logger=None):
    """The closed-form likelihood without stochastic volatility and
    the particle filter with it."""
    if spec.sv:
        return make_smc_evaluator(config, logger)

    return lambda panel, params, index=0: loglik_no_sv(panel, params)


def dic(panel, posterior, evaluator, n_eval_draws=None, thin=20, threads=1,
        logger=None):
    """Deviance information criterion from a posterior sample.

    The likelihood is evaluated at the posterior mean and averaged over
    every ``thin``-th draw (at most ``n_eval_draws`` of them);
    p_D = 2 (loglik at mean - mean loglik) and DIC = -2 loglik at mean
    + 2 p_D.
    """
    logger = logger or silent("dic")
    if not posterior.draws:
        raise DomainError("Posterior sample is empty")

    subset = list(enumerate(posterior.draws))[::max(int(thin), 1)]
    if n_eval_draws is not None:
        subset = subset[:n_eval_draws]

    at_mean = evaluator(panel, posterior.posterior_mean(), -1)

    def evaluate(item):
        index, params = item
        try:
            return evaluator(panel, params, index)
        except TermSVError as err:
            raise EvaluationError(index, err)

    if threads > 1:
        with futures.ThreadPoolExecutor(max_workers=threads) as executor:
            values = np.array(list(executor.map(evaluate, subset)))
    else:
        values = np.array([evaluate(item) for item in subset])

    mean_loglik = float(values.mean())
    p_d = 2.0 * (at_mean - mean_loglik)
    result = DicResult(-2.0 * at_mean + 2.0 * p_d, p_d, at_mean, mean_loglik, len(values))
    logger.info("DIC {0:.3f} (p_D {1:.3f}) from {2} draws", result.dic, p_d, len(values))
    return result
