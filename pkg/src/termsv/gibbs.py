"""Collapsed Gibbs sampler for dynamic Nelson-Siegel/Svensson models
with Wishart stochastic volatility.

One cycle updates

1. (lambda, beta) jointly: a random walk Metropolis-Hastings move on
   ln(lambda) with the factor path integrated out, followed by an exact
   draw of the path from its Gaussian conditional,
2. (nu, H) jointly: a random walk move on ln(nu - m - 1) with the
   precision path integrated out, followed by forward filtering and
   backward sampling of H. Without stochastic volatility Sigma0 is
   drawn from its inverse Wishart conditional instead,
3. alpha and sigma_y from their conjugate conditionals.

The factor path is always drawn as a single block through the banded
posterior precision matrix of the states.
"""

import time

from collections import deque, namedtuple

import numpy as np
import pandas as pd

from numpy.linalg import LinAlgError

from .exceptions import (DataError, DegenerateInputError, DomainError,
                         InsufficientDataError, SamplerError, TermSVError)
from .logger import silent
from .model import (ALPHA_PRIOR_SD, BETA0_PRIOR_VAR, SIGMA0_SV, ModelSpec, Params,
                    gamma_from_nu, log_prior_terms,
                    sigma0_prior_scale)
from .samplers import (BandedPrecision, RngStream, cholesky, mvt_logpdf,
                       sample_gamma, sample_gaussian_banded,
                       sample_inverse_wishart, sample_wishart)
from .validate import all, transform, optional, positive, boolean, parse_keyvalue

__all__ = ["GibbsConfig", "StatePath", "ChainState", "PosteriorSample",
           "TerminalState", "BLOCKS", "state_posterior",
           "integrated_loglik_y_given_H", "step_beta_lambda",
           "forward_filter_Sigma", "backward_sample_H",
           "integrated_loglik_beta", "step_H_nu", "step_alpha",
           "step_sigma_y", "step_Sigma0_noSV", "residual_sum_of_squares",
           "gibbs_cycle",
           "init_chain_state", "chain_state_from_params", "run_chain", "effective_sample_size",
           "persistence", "summarize", "save_draws", "load_draws",
           "save_states", "load_states"]

#: Blocks that may be held fixed through GibbsConfig.fixed
BLOCKS = frozenset(["lambda", "beta", "beta0", "nu", "H", "alpha",
                    "sigma_y", "Sigma0"])

TerminalState = namedtuple("TerminalState", "beta H Sigma")


class GibbsConfig(object):
    """Settings of a Gibbs run.

    ``fixed`` names blocks held at their initial values. Holding
    ``beta0`` conditions on the initial factors instead of drawing them
    with the path; holding ``beta`` also holds lambda and holding ``H``
    also holds nu. ``keep_states`` is the number of full state paths
    kept from the end of the chain.
    """

    def __init__(self, n_iterations=11000, n_burnin=1000, rw_scale_lambda=0.05,
                 rw_scale_nu=0.3, adapt_during_burnin=True, seed=0, stream_id=0,
                 fixed=(), keep_states=0, target_acceptance=0.30):
        self.n_iterations = int(n_iterations)
        self.n_burnin = int(n_burnin)
        self.rw_scale_lambda = float(rw_scale_lambda)
        self.rw_scale_nu = float(rw_scale_nu)
        self.adapt_during_burnin = bool(adapt_during_burnin)
        self.seed = int(seed)
        self.stream_id = stream_id
        self.fixed = frozenset(fixed)
        self.keep_states = int(keep_states)
        self.target_acceptance = float(target_acceptance)

        if not 0 <= self.n_burnin < self.n_iterations:
            raise DomainError("Need 0 <= n_burnin < n_iterations, got {0} and {1}".format(
                self.n_burnin, self.n_iterations))
        if self.rw_scale_lambda < 0 or self.rw_scale_nu < 0:
            raise DomainError("Random walk step sizes must not be negative")
        unknown = self.fixed - BLOCKS
        if unknown:
            raise DomainError("Unknown block(s): {0}".format(", ".join(sorted(unknown))))

    @property
    def n_draws(self):
        return self.n_iterations - self.n_burnin

    def replace(self, **kwargs):
        fields = dict(vars(self))
        fields.update(kwargs)
        return GibbsConfig(**fields)

    @classmethod
    def from_text(cls, text):
        schema = {
            optional("n_iterations"): all(transform(int), positive),
            optional("n_burnin"): transform(int),
            optional("rw_scale_lambda"): transform(float),
            optional("rw_scale_nu"): transform(float),
            optional("adapt_during_burnin"): transform(boolean),
            optional("seed"): transform(int),
            optional("fixed"): transform(lambda v: [b.strip() for b in v.split(",") if b.strip()]),
            optional("keep_states"): transform(int),
        }
        return cls(**parse_keyvalue(text, "Gibbs config", DomainError, schema))


class StatePath(object):
    """A joint draw of the factor path beta_0..beta_T and, with
    stochastic volatility, the precision path H_1..H_T and the forward
    filter scales Sigma_1..Sigma_T."""

    def __init__(self, beta, H=None, Sigma_filter=None):
        self.beta = np.asarray(beta, dtype=float)
        self.H = None if H is None else np.asarray(H, dtype=float)
        self.Sigma_filter = None if Sigma_filter is None else np.asarray(Sigma_filter, dtype=float)

    @property
    def T(self):
        return self.beta.shape[0] - 1

    @property
    def m(self):
        return self.beta.shape[1]

    def eta(self, alpha):
        """Innovations eta_t = beta_t - alpha - beta_{t-1}, t = 1..T."""
        return np.diff(self.beta, axis=0) - alpha

    def terminal(self):
        return TerminalState(self.beta[-1].copy(),
                             None if self.H is None else self.H[-1].copy(),
                             None if self.Sigma_filter is None else self.Sigma_filter[-1].copy())

    def copy(self):
        return StatePath(self.beta.copy(),
                         None if self.H is None else self.H.copy(),
                         None if self.Sigma_filter is None else self.Sigma_filter.copy())


def precision_path(params, path, T):
    """Innovation precisions H_1..H_T and their log determinants. Without
    stochastic volatility every H_t is Sigma0^-1."""
    if params.spec.sv:
        H = path.H
        logdet = np.linalg.slogdet(H)[1]
    else:
        inv = np.linalg.inv(params.Sigma0)
        H = np.broadcast_to(0.5 * (inv + inv.T), (T, params.m, params.m))
        logdet = np.full(T, -np.linalg.slogdet(params.Sigma0)[1])

    return H, logdet


def state_posterior(panel, params, H, logdet_H, Z=None, fixed_beta0=False):
    """Posterior precision of the factor path and the log marginal
    likelihood of the prices with the path integrated out.

    The states are beta_0..beta_T with beta_0 ~ N(0, 1000 I), or
    beta_1..beta_T when ``fixed_beta0`` conditions on params.beta0.
    Returns ``(BandedPrecision, loglik)``.
    """
    if Z is None:
        Z = panel.loadings(params.lambdas, params.m)

    y = panel.prices
    T, N = y.shape
    m = params.m
    alpha = params.alpha
    s2 = params.sigma_y ** 2
    Ha = H @ alpha

    if fixed_beta0:
        diag = np.array(H, copy=True)
        diag[:-1] += H[1:]
        sub = -np.asarray(H[1:])
        linear = np.array(Ha, copy=True)
        linear[:-1] -= Ha[1:]
        start = params.beta0 + alpha
        linear[0] += H[0] @ params.beta0
        const = start @ H[0] @ start + np.sum(Ha[1:] * alpha)
        logdet_prior = np.sum(logdet_H)
        offset = 0
    else:
        diag = np.zeros((T + 1, m, m))
        diag[0] = np.eye(m) / BETA0_PRIOR_VAR
        diag[:-1] += H
        diag[1:] += H
        sub = -np.asarray(H)
        linear = np.zeros((T + 1, m))
        linear[1:] += Ha
        linear[:-1] -= Ha
        const = np.sum(Ha * alpha)
        logdet_prior = -m * np.log(BETA0_PRIOR_VAR) + np.sum(logdet_H)
        offset = 1

    diag[offset:] += np.einsum("tni,tnj->tij", Z, Z) / s2
    linear[offset:] += np.einsum("tni,tn->ti", Z, y) / s2

    prec = BandedPrecision.from_blocks(diag, sub, linear=linear.ravel())
    quad = np.sum(y * y) / s2 + const - linear.ravel() @ prec.mean
    loglik = (-0.5 * T * N * np.log(2.0 * np.pi * s2) + 0.5 * logdet_prior
              - 0.5 * prec.logdet() - 0.5 * quad)

    return prec, float(loglik)


def integrated_loglik_y_given_H(panel, params, H_path, Z=None):
    """Log density of the prices given the precision path, with the
    factor path beta_0..beta_T integrated out."""
    H_path = np.asarray(H_path, dtype=float)
    logdet = np.linalg.slogdet(H_path)[1]
    return state_posterior(panel, params, H_path, logdet, Z=Z)[1]


def forward_filter_Sigma(beta_path, params):
    """Forward filter scales Sigma_t = eta_t eta_t' + gamma Sigma_{t-1},
    t = 1..T, started from Sigma0."""
    gamma = gamma_from_nu(params.nu, params.m)
    beta_path = np.asarray(beta_path, dtype=float)
    eta = np.diff(beta_path, axis=0) - params.alpha
    out = np.empty((eta.shape[0], params.m, params.m))
    prev = params.Sigma0
    for t, e in enumerate(eta):
        prev = out[t] = np.outer(e, e) + gamma * prev

    return out


def backward_sample_H(Sigma_filter, nu, rng):
    """Draws H_1..H_T given the forward filter.

    H_T comes from the filtered law W(nu + 1, Sigma_T^-1), then
    H_t = gamma H_{t+1} + z z' with z ~ N(0, Sigma_t^-1).
    """
    Sigma_filter = np.asarray(Sigma_filter, dtype=float)
    T, m = Sigma_filter.shape[0], Sigma_filter.shape[1]
    gamma = gamma_from_nu(nu, m)

    H = np.empty_like(Sigma_filter)
    terminal = np.linalg.inv(Sigma_filter[-1])
    H[-1] = sample_wishart(nu + 1.0, 0.5 * (terminal + terminal.T), rng)
    if T > 1:
        lower = cholesky(Sigma_filter[:-1], "Forward filter scale")
        e = rng.standard_normal((T - 1, m, 1))
        z = np.linalg.solve(np.swapaxes(lower, -1, -2), e)[..., 0]
        shocks = z[:, :, None] * z[:, None, :]
        for t in range(T - 2, -1, -1):
            H[t] = gamma * H[t + 1] + shocks[t]

    return H


def integrated_loglik_beta(beta_path, params, Sigma_filter=None):
    """Log density of beta_1..beta_T given beta_0 with the precision path
    integrated out: a product of multivariate t densities with nu - m + 1
    degrees of freedom."""
    m = params.m
    nu = params.nu
    gamma = gamma_from_nu(nu, m)
    beta_path = np.asarray(beta_path, dtype=float)
    if Sigma_filter is None:
        Sigma_filter = forward_filter_Sigma(beta_path, params)

    previous = np.concatenate([params.Sigma0[None], Sigma_filter[:-1]])
    df = nu - m + 1.0
    return float(np.sum(mvt_logpdf(beta_path[1:], beta_path[:-1] + params.alpha,
                                   gamma * previous / df, df)))


class ChainState(object):
    """The mutable state of one chain: parameters, state path, cached
    loadings and random walk step sizes."""

    def __init__(self, params, path, Z, steps=None):
        self.params = params
        self.path = path
        self.Z = Z
        self.steps = dict(steps or {})
        self.accepted = dict.fromkeys(("lambda", "nu"), 0)
        self.proposed = dict.fromkeys(("lambda", "nu"), 0)
        self.last_accept = {}

    def reset_counters(self):
        for key in self.accepted:
            self.accepted[key] = self.proposed[key] = 0

    def acceptance_rates(self):
        return dict((key, self.accepted[key] / float(self.proposed[key]))
                    for key in self.accepted if self.proposed[key])

    def _record(self, block, accepted):
        self.proposed[block] += 1
        self.accepted[block] += int(accepted)
        self.last_accept[block] = accepted


def step_beta_lambda(state, panel, rng, fixed=frozenset()):
    """Collapsed update of the decay rates, then an exact draw of the
    factor path from its Gaussian conditional."""
    params = state.params
    fixed_beta0 = "beta0" in fixed
    H, logdet = precision_path(params, state.path, panel.T)
    prec, loglik = state_posterior(panel, params, H, logdet, state.Z, fixed_beta0)

    if "lambda" not in fixed:
        step = state.steps.get("lambda", 0.0)
        log_lambda = np.log(params.lambdas)
        proposal = np.exp(log_lambda + step * rng.standard_normal(len(log_lambda)))
        accepted = False
        candidate = params.replace(lambdas=tuple(proposal)) \
            if not (params.m == 4 and proposal[0] == proposal[1]) else None

        if candidate is not None and np.isfinite(log_prior_terms(candidate)["lambda"]):
            Z_new = panel.loadings(candidate.lambdas, params.m)
            prec_new, loglik_new = state_posterior(panel, candidate, H, logdet,
                                                   Z_new, fixed_beta0)
            if np.log(rng.uniform()) < loglik_new - loglik:
                state.params, state.Z = candidate, Z_new
                prec, loglik = prec_new, loglik_new
                accepted = True

        state._record("lambda", accepted)

    draw = sample_gaussian_banded(prec, rng).reshape(-1, params.m)
    if fixed_beta0:
        draw = np.vstack([state.params.beta0, draw])
    else:
        state.params.beta0 = draw[0].copy()
    state.path.beta = draw

    return loglik


def step_H_nu(state, rng, fixed=frozenset()):
    """Collapsed update of nu, then forward filtering and backward
    sampling of the precision path."""
    params = state.params
    m = params.m
    beta = state.path.beta

    if "nu" not in fixed:
        step = state.steps.get("nu", 0.0)
        u = np.log(params.nu - m - 1.0)
        u_new = u + step * rng.standard_normal()
        candidate = params.replace(nu=m + 1.0 + np.exp(u_new))
        accepted = False
        if candidate.nu > m + 1:
            current = integrated_loglik_beta(beta, params)
            proposed = integrated_loglik_beta(beta, candidate)
            if np.log(rng.uniform()) < proposed - current + u_new - u:
                state.params = candidate
                accepted = True
        state._record("nu", accepted)

    Sigma_filter = forward_filter_Sigma(beta, state.params)
    state.path.Sigma_filter = Sigma_filter
    state.path.H = backward_sample_H(Sigma_filter, state.params.nu, rng)


def step_alpha(state, rng):
    """Draws the drift from its Gaussian conditional given the factor
    and precision paths, under a N(0, 100^2 I) prior."""
    params = state.params
    m = params.m
    H, _ = precision_path(params, state.path, state.path.T)
    increments = np.diff(state.path.beta, axis=0)

    precision = np.sum(H, axis=0) + np.eye(m) / ALPHA_PRIOR_SD ** 2
    V = np.linalg.inv(precision)
    V = 0.5 * (V + V.T)
    mean = V @ np.einsum("tij,tj->i", H, increments)
    state.params.alpha = mean + cholesky(V, "alpha covariance") @ rng.standard_normal(m)


def residual_sum_of_squares(panel, Z, beta_path):
    fitted = np.einsum("tij,tj->ti", Z, beta_path[1:])
    return float(np.sum((panel.prices - fitted) ** 2))


def step_sigma_y(state, panel, rng):
    """1/sigma_y^2 ~ Gamma(1 + TN/2, rate 1 + SSR/2)."""
    ssr = residual_sum_of_squares(panel, state.Z, state.path.beta)
    shape = 1.0 + 0.5 * panel.T * panel.N
    rate = 1.0 + 0.5 * ssr
    state.params.sigma_y = 1.0 / np.sqrt(sample_gamma(shape, 1.0 / rate, rng))


def step_Sigma0_noSV(state, rng):
    """Conjugate inverse Wishart draw of the static innovation
    covariance."""
    params = state.params
    m = params.m
    eta = state.path.eta(params.alpha)
    scale = sigma0_prior_scale(m) + eta.T @ eta
    state.params.Sigma0 = sample_inverse_wishart(m + 10 + eta.shape[0], scale, rng)


def gibbs_cycle(state, panel, rng, fixed=frozenset(), cycle=None):
    """Runs one full cycle, wrapping failures in :class:`SamplerError`."""
    params = state.params
    blocks = []
    if "beta" not in fixed:
        blocks.append(("beta", lambda: step_beta_lambda(state, panel, rng, fixed)))
    if params.spec.sv:
        if "H" not in fixed:
            blocks.append(("H", lambda: step_H_nu(state, rng, fixed)))
    elif "Sigma0" not in fixed:
        blocks.append(("Sigma0", lambda: step_Sigma0_noSV(state, rng)))
    if "alpha" not in fixed:
        blocks.append(("alpha", lambda: step_alpha(state, rng)))
    if "sigma_y" not in fixed:
        blocks.append(("sigma_y", lambda: step_sigma_y(state, panel, rng)))

    for name, func in blocks:
        try:
            func()
        except (TermSVError, LinAlgError, FloatingPointError, ValueError) as err:
            raise SamplerError(cycle, name, err)

    if state.params.spec.sv:
        state.path.Sigma_filter = forward_filter_Sigma(state.path.beta, state.params)


def least_squares_factors(prices, Z, ridge=1e-10):
    """Cross-section least squares factors for every date."""
    m = Z.shape[-1]
    ZtZ = np.einsum("tni,tnj->tij", Z, Z) + ridge * np.eye(m)
    Zty = np.einsum("tni,tn->ti", Z, prices)
    return np.linalg.solve(ZtZ, Zty[..., None])[..., 0]


def _lambda_grid(m, size):
    grid = np.exp(np.linspace(np.log(5e-4), np.log(5e-2), size))
    if m == 3:
        return [(v,) for v in grid]
    return [(a, b) for i, a in enumerate(grid) for b in grid[i + 1:]]


def init_chain_state(panel, spec, rng, Sigma0=None, grid_size=None):
    """Data driven starting values.

    lambda maximises the integrated likelihood over a coarse grid with
    H_t = I / 0.01, the factors come from per-date least squares, nu
    starts at m + 10, alpha at zero and sigma_y at the residual RMS.
    """
    m = spec.m
    T = panel.T
    if panel.N < m:
        raise DataError("Need at least {0} contracts for a {1}-factor model".format(m, m))

    if grid_size is None:
        grid_size = 20 if m == 3 else 10
    H = np.broadcast_to(np.eye(m) / SIGMA0_SV, (T, m, m))
    logdet = np.full(T, -m * np.log(SIGMA0_SV))

    best = None
    for lambdas in _lambda_grid(m, grid_size):
        Z = panel.loadings(lambdas, m)
        beta = least_squares_factors(panel.prices, Z)
        resid = panel.prices - np.einsum("tij,tj->ti", Z, beta)
        sigma_y = max(np.sqrt(np.mean(resid ** 2)), 1e-4)
        trial = Params(spec, lambdas, sigma_y, nu=m + 10.0 if spec.sv else None,
                       Sigma0=SIGMA0_SV * np.eye(m))
        loglik = state_posterior(panel, trial, H, logdet, Z)[1]
        if best is None or loglik > best[0]:
            best = (loglik, trial, Z, beta)

    _, params, Z, beta = best
    path = np.vstack([beta[:1], beta])
    params.beta0 = path[0].copy()
    if Sigma0 is not None:
        params.Sigma0 = np.asarray(Sigma0, dtype=float)
    elif not spec.sv:
        increments = np.diff(path, axis=0)
        cov = np.cov(increments, rowvar=False) if T > m else np.zeros((m, m))
        params.Sigma0 = cov + 1e-8 * np.eye(m)
    params.check()

    return chain_state_from_params(panel, params, rng, path, Z)


def chain_state_from_params(panel, params, rng, path=None, Z=None):
    """A chain state at given parameters. The factor path defaults to
    per-date least squares started at params.beta0."""
    if Z is None:
        Z = panel.loadings(params.lambdas, params.m)
    if path is None:
        path = np.vstack([params.beta0, least_squares_factors(panel.prices, Z)])

    state = ChainState(params, StatePath(path), Z)
    if params.spec.sv:
        state.path.Sigma_filter = forward_filter_Sigma(path, params)
        state.path.H = backward_sample_H(state.path.Sigma_filter, params.nu, rng)

    return state


class PosteriorSample(object):
    """Post burn-in output of a chain.

    ``draws`` holds one :class:`Params` per stored cycle and
    ``terminal`` the matching end-of-sample states (beta_T, H_T,
    Sigma_T). ``states`` keeps the last ``keep_states`` full paths and
    ``mean_beta`` the posterior mean factor path.
    """

    def __init__(self, spec, draws, terminal=None, states=None, mean_beta=None,
                 acceptance_rates=None, timing=None, n_burnin=0, seed=None):
        self.spec = spec
        self.draws = list(draws)
        self.terminal = list(terminal or [])
        self.states = list(states or [])
        self.mean_beta = mean_beta
        self.acceptance_rates = dict(acceptance_rates or {})
        self.timing = timing
        self.n_burnin = n_burnin
        self.seed = seed
        self.final_state = None

    def __len__(self):
        return len(self.draws)

    def scalar_frame(self):
        """One row per draw, one column per scalar parameter."""
        return pd.DataFrame([dict(p.scalars()) for p in self.draws],
                            columns=[k for k, _ in self.draws[0].scalars()])

    def posterior_mean(self):
        """Params at the posterior mean of every parameter."""
        if not self.draws:
            raise InsufficientDataError("Posterior sample is empty")

        first = self.draws[0]
        mean = lambda attr: np.mean([np.asarray(getattr(p, attr), dtype=float)
                                     for p in self.draws], axis=0)
        nu = float(mean("nu")) if first.spec.sv else first.nu
        return Params(self.spec, tuple(mean("lambdas")), float(mean("sigma_y")),
                      alpha=mean("alpha"), nu=nu, beta0=mean("beta0"),
                      Sigma0=mean("Sigma0"))

    def ess(self):
        frame = self.scalar_frame()
        out = {}
        for name in frame.columns:
            try:
                out[name] = effective_sample_size(frame[name].values)
            except (DegenerateInputError, InsufficientDataError):
                out[name] = np.nan

        return out


def run_chain(panel, spec, config=None, init=None, logger=None):
    """Runs a Gibbs chain and collects the post burn-in draws.

    ``init`` may be a :class:`ChainState` or a :class:`Params` bundle;
    otherwise the chain starts from :func:`init_chain_state`. Step sizes
    are adapted towards the target acceptance rate during burn-in and
    frozen afterwards.
    """
    config = config or GibbsConfig()
    logger = logger or silent("gibbs")
    rng = RngStream(config.seed, config.stream_id)

    if isinstance(init, ChainState):
        if init.path.T != panel.T:
            raise DomainError("Initial state covers {0} dates, panel has {1}".format(
                init.path.T, panel.T))
        state = init
    elif isinstance(init, Params):
        state = chain_state_from_params(panel, init.replace(), rng)
    else:
        state = init_chain_state(panel, spec, rng)

    state.steps.setdefault("lambda", config.rw_scale_lambda)
    state.steps.setdefault("nu", config.rw_scale_nu)
    state.reset_counters()

    fixed = config.fixed
    draws, terminal = [], []
    states = deque(maxlen=config.keep_states or None) if config.keep_states else None
    beta_sum = np.zeros_like(state.path.beta)
    started = time.perf_counter()

    for cycle in range(config.n_iterations):
        gibbs_cycle(state, panel, rng, fixed, cycle)

        if cycle < config.n_burnin:
            if config.adapt_during_burnin:
                gain = (cycle + 1.0) ** -0.6
                for block, accepted in state.last_accept.items():
                    state.steps[block] *= np.exp(gain * (accepted - config.target_acceptance))
            if cycle + 1 == config.n_burnin:
                logger.info("Burn-in finished after {0} cycles, acceptance {1}",
                            config.n_burnin, _format_rates(state.acceptance_rates()))
                logger.debug("Step sizes frozen at {0}", _format_rates(state.steps))
                state.reset_counters()
            continue

        draws.append(state.params.replace())
        terminal.append(state.path.terminal())
        beta_sum += state.path.beta
        if states is not None:
            states.append(state.path.copy())

        if logger.enabled("debug") and (cycle + 1) % 1000 == 0:
            logger.debug("Cycle {0}/{1}", cycle + 1, config.n_iterations)

    timing = (time.perf_counter() - started) / config.n_iterations
    rates = state.acceptance_rates()
    logger.info("Stored {0} draws, {1:.4f} s per cycle, acceptance {2}",
                len(draws), timing, _format_rates(rates))

    sample = PosteriorSample(spec, draws, terminal, states or [],
                             beta_sum / max(len(draws), 1), rates, timing,
                             config.n_burnin, config.seed)
    sample.final_state = state
    return sample


def _format_rates(rates):
    return ", ".join("{0}={1:.3f}".format(k, v) for k, v in sorted(rates.items())) or "n/a"


def effective_sample_size(draws):
    """Effective sample size with Geyer's initial monotone sequence
    estimator of the integrated autocorrelation time."""
    x = np.asarray(draws, dtype=float)
    n = len(x)
    if n < 100:
        raise InsufficientDataError("Need at least 100 draws, got {0}".format(n))
    if np.ptp(x) == 0:
        raise DegenerateInputError("Constant series has no effective sample size")

    x = x - x.mean()
    spectrum = np.fft.rfft(x, 2 * n)
    acov = np.fft.irfft(spectrum * np.conj(spectrum))[:n] / n
    rho = acov / acov[0]

    pairs = rho[:n - n % 2].reshape(-1, 2).sum(axis=1)
    cut = np.nonzero(pairs <= 0)[0]
    if len(cut):
        pairs = pairs[:cut[0]]
    pairs = np.minimum.accumulate(pairs)

    tau = -1.0 + 2.0 * np.sum(pairs)
    return float(min(n / tau, n)) if tau > 0 else float(n)


def persistence(sample):
    """Draws of the discount factor gamma implied by the nu draws."""
    if not sample.spec.sv:
        raise DomainError("Persistence is only defined with stochastic volatility")
    return np.array([gamma_from_nu(p.nu, p.m) for p in sample.draws])


def summarize(sample):
    """Posterior mean, standard deviation, 95% interval and ESS of every
    scalar parameter, plus gamma for stochastic volatility models."""
    frame = sample.scalar_frame()
    if sample.spec.sv:
        frame["gamma"] = persistence(sample)

    ess = sample.ess()
    rows = []
    for name in frame.columns:
        values = frame[name].values
        if name not in ess:
            try:
                ess[name] = effective_sample_size(values)
            except (DegenerateInputError, InsufficientDataError):
                ess[name] = np.nan
        rows.append({
            "parameter": name,
            "mean": values.mean(),
            "sd": values.std(ddof=1) if len(values) > 1 else np.nan,
            "q025": np.quantile(values, 0.025),
            "q975": np.quantile(values, 0.975),
            "ess": ess[name],
        })

    return pd.DataFrame(rows, columns=["parameter", "mean", "sd", "q025", "q975", "ess"])


def _draw_columns(m):
    columns = ["beta0_{0}".format(i + 1) for i in range(m)]
    rows, cols = np.tril_indices(m)
    columns += ["sigma0_{0}{1}".format(r + 1, c + 1) for r, c in zip(rows, cols)]
    return columns


def save_draws(sample, path, header=None):
    """Writes one CSV row per draw with every parameter. ``header`` lines
    are written first as # comments."""
    m = sample.spec.m
    rows, cols = np.tril_indices(m)
    records = []
    for p in sample.draws:
        record = dict(p.scalars())
        record.update(zip(_draw_columns(m),
                          np.concatenate([p.beta0, p.Sigma0[rows, cols]])))
        records.append(record)

    columns = [k for k, _ in sample.draws[0].scalars()] + _draw_columns(m)
    with open(path, "w") as fd:
        for line in header or []:
            fd.write("# {0}\n".format(line))
        pd.DataFrame(records, columns=columns).to_csv(fd, index=False, float_format="%.12g")


def load_draws(path):
    """Reads a draws file written by :func:`save_draws`."""
    try:
        frame = pd.read_csv(path, comment="#")
    except (OSError, ValueError) as err:
        raise DataError("Unable to read draws {0}: {1}".format(path, err))

    m = sum(1 for c in frame.columns if c.startswith("alpha"))
    if m not in (3, 4):
        raise DataError("Draws file {0} has {1} alpha columns".format(path, m))
    spec = ModelSpec(m, "nu" in frame.columns)
    rows, cols = np.tril_indices(m)

    draws = []
    for record in frame.to_dict("records"):
        Sigma0 = np.zeros((m, m))
        Sigma0[rows, cols] = [record["sigma0_{0}{1}".format(r + 1, c + 1)]
                              for r, c in zip(rows, cols)]
        Sigma0[cols, rows] = Sigma0[rows, cols]
        draws.append(Params(
            spec, [record["lambda{0}".format(i + 1)] for i in range(spec.n_lambda)],
            record["sigma_y"],
            alpha=[record["alpha{0}".format(i + 1)] for i in range(m)],
            nu=record.get("nu"),
            beta0=[record["beta0_{0}".format(i + 1)] for i in range(m)],
            Sigma0=Sigma0))

    return PosteriorSample(spec, draws)


def save_states(states, path):
    """Binary dump of state paths: a little-endian int64 header
    (T, m, count) followed by, per path, beta_0..beta_T and H_1..H_T as
    little-endian doubles."""
    states = list(states)
    if not states:
        raise DataError("No state paths to save")
    T, m = states[0].T, states[0].m
    with open(path, "wb") as fd:
        np.array([T, m, len(states)], dtype="<i8").tofile(fd)
        for state in states:
            H = state.H if state.H is not None else np.zeros((T, m, m))
            np.asarray(state.beta, dtype="<f8").tofile(fd)
            np.asarray(H, dtype="<f8").tofile(fd)


def load_states(path):
    with open(path, "rb") as fd:
        header = np.fromfile(fd, dtype="<i8", count=3)
        if len(header) != 3:
            raise DataError("Truncated state file {0}".format(path))
        T, m, count = (int(v) for v in header)
        size = (T + 1) * m + T * m * m
        data = np.fromfile(fd, dtype="<f8")

    if data.size != count * size:
        raise DataError("State file {0} holds {1} values, expected {2}".format(
            path, data.size, count * size))

    states = []
    for chunk in data.reshape(count, size):
        beta = chunk[:(T + 1) * m].reshape(T + 1, m)
        H = chunk[(T + 1) * m:].reshape(T, m, m)
        states.append(StatePath(beta, None if not H.any() else H))

    return states
