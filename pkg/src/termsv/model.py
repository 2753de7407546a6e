"""Parameter bundles, Nelson-Siegel/Svensson loadings, the volatility
restriction linking the discount factor to the Wishart degrees of
freedom, priors and model-implied price moments.

Maturities are measured in calendar days and decay rates per day.
"""

from collections import namedtuple

import numpy as np

from scipy.stats import invwishart, multivariate_normal

from .exceptions import DomainError
from .validate import (all, transform, optional, positive, finite, floats,
                       boolean, validate, parse_keyvalue)

__all__ = ["ModelSpec", "Params", "loading_row", "loading_matrix",
           "gamma_from_nu", "price_moments", "log_prior", "log_prior_terms",
           "innovation_cov", "ewma_innovation_cov", "LAMBDA_SUPPORT",
           "SIGMA0_SV", "sigma0_prior_scale"]

#: Flat prior on ln(lambda) is restricted to this range (per day)
LAMBDA_SUPPORT = (1e-5, 1.0)

#: Fixed initial scale used by the stochastic volatility models
SIGMA0_SV = 0.1 ** 2

ALPHA_PRIOR_SD = 100.0
BETA0_PRIOR_VAR = 1000.0
SERIES_THRESHOLD = 1e-6


_ModelSpec = namedtuple("ModelSpec", "m sv")


class ModelSpec(_ModelSpec):
    """Shape of a model: factor count (3 for Nelson-Siegel, 4 for
    Svensson) and whether the Wishart volatility process is switched on.
    """

    def __new__(cls, m, sv=True):
        if m not in (3, 4):
            raise DomainError("Factor count must be 3 or 4, got {0}".format(m))
        return super(ModelSpec, cls).__new__(cls, int(m), bool(sv))

    @property
    def n_lambda(self):
        return 1 if self.m == 3 else 2

    @property
    def name(self):
        return "{0}F-{1}".format(self.m, "SV" if self.sv else "noSV")

    @classmethod
    def from_name(cls, name):
        """Parses names like ``4F-SV`` or ``3F-noSV``."""
        text = name.strip().upper()
        try:
            m, _, sv = text.partition("F")
            return cls(int(m), sv.lstrip("-") == "SV")
        except ValueError:
            raise DomainError("Invalid model name: {0}".format(name))


def _slope(x):
    x = np.asarray(x, dtype=float)
    small = x < SERIES_THRESHOLD
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x / 2.0 + x ** 2 / 6.0,
                    -np.expm1(-safe) / safe)


def _curvature(x):
    x = np.asarray(x, dtype=float)
    small = x < SERIES_THRESHOLD
    return np.where(small, x / 2.0 - x ** 2 / 3.0, _slope(x) - np.exp(-x))


def loading_matrix(tau, lambdas, m):
    """Loading rows for an array of maturities.

    Returns an array of shape ``tau.shape + (m,)`` whose last axis is
    (1, slope, curvature[, second curvature]).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau > 0)):
        raise DomainError("Maturities must be positive")

    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if m not in (3, 4) or len(lambdas) < m - 2:
        raise DomainError("Need {0} decay rate(s) for m={1}".format(m - 2, m))

    x1 = lambdas[0] * tau
    columns = [np.ones_like(tau), _slope(x1), _curvature(x1)]
    if m == 4:
        columns.append(_curvature(lambdas[1] * tau))

    return np.stack(columns, axis=-1)


def loading_row(tau, lambdas, m):
    if not tau > 0:
        raise DomainError("Maturity must be positive, got {0}".format(tau))
    return loading_matrix(np.asarray([tau], dtype=float), lambdas, m)[0]


def gamma_from_nu(nu, m):
    """Discount factor implied by the EWMA restriction,
    gamma = (nu - m - 1) / (nu - m)."""
    if not nu > m + 1:
        raise DomainError("nu must exceed m + 1 = {0}, got {1}".format(m + 1, nu))
    return (nu - m - 1.0) / (nu - m)


def sigma0_prior_scale(m):
    """Inverse Wishart scale of the no-SV Sigma0 prior.

    The prior is Sigma0 ~ IW(m + 10, 0.15^2 I / (m + 10)), the scale that
    the conjugate update adds eta'eta to. It does not give
    E(Sigma0^-1) = 0.15^2 I: under it E(Sigma0^-1) is (m + 10)^2 / 0.15^2 I.
    Reading the same scale as a Wishart prior on Sigma0^-1 would give
    that mean but break conjugacy with the Sigma0 update, so the
    inverse Wishart form is used in both the prior and the sampler.
    """
    return 0.15 ** 2 * np.eye(m) / (m + 10)


def _lower_triangle(matrix):
    rows, cols = np.tril_indices(matrix.shape[0])
    return matrix[rows, cols]


def _from_lower_triangle(values, m):
    values = np.asarray(values, dtype=float)
    if len(values) != m * (m + 1) // 2:
        raise DomainError("sigma0 needs {0} lower-triangle entries, "
                          "got {1}".format(m * (m + 1) // 2, len(values)))
    matrix = np.zeros((m, m))
    rows, cols = np.tril_indices(m)
    matrix[rows, cols] = values
    matrix[cols, rows] = values
    return matrix


_params_schema = {
    "m": transform(int),
    optional("sv"): transform(boolean),
    "lambda1": all(transform(float), positive),
    optional("lambda2"): all(transform(float), positive),
    "sigma_y": all(transform(float), positive),
    optional("nu"): all(transform(float), positive),
    "sigma0": all(transform(floats), finite),
}


class Params(object):
    """A full parameter bundle (lambda, sigma_y, alpha, nu, beta0, Sigma0)
    together with the :class:`ModelSpec` it belongs to.

    In the stochastic volatility model Sigma0 is the scale of the
    initial precision law; the implied innovation covariance is
    Sigma0 / (nu - m). Without stochastic volatility Sigma0 is the
    innovation covariance itself and nu is unused.
    """

    def __init__(self, spec, lambdas, sigma_y, alpha=None, nu=None,
                 beta0=None, Sigma0=None):
        self.spec = spec
        m = spec.m
        self.lambdas = tuple(float(v) for v in np.atleast_1d(lambdas))
        self.sigma_y = float(sigma_y)
        self.alpha = np.zeros(m) if alpha is None else np.asarray(alpha, dtype=float)
        self.nu = None if nu is None else float(nu)
        self.beta0 = np.zeros(m) if beta0 is None else np.asarray(beta0, dtype=float)
        if Sigma0 is None:
            Sigma0 = SIGMA0_SV * np.eye(m)
        self.Sigma0 = np.asarray(Sigma0, dtype=float)
        self.check()

    def check(self):
        """Raises :class:`DomainError` unless the bundle is admissible."""
        m = self.spec.m
        if len(self.lambdas) != self.spec.n_lambda:
            raise DomainError("{0} needs {1} decay rate(s), got {2}".format(
                self.spec.name, self.spec.n_lambda, len(self.lambdas)))
        if not np.all(np.asarray(self.lambdas) > 0):
            raise DomainError("Decay rates must be positive")
        if m == 4 and self.lambdas[0] == self.lambdas[1]:
            raise DomainError("lambda1 and lambda2 must differ")
        if not self.sigma_y >= 0:
            raise DomainError("sigma_y must be non-negative")
        if self.alpha.shape != (m,) or self.beta0.shape != (m,):
            raise DomainError("alpha and beta0 must have length {0}".format(m))
        if self.Sigma0.shape != (m, m):
            raise DomainError("Sigma0 must be {0}x{0}".format(m))
        if self.spec.sv:
            if self.nu is None:
                raise DomainError("nu is required with stochastic volatility")
            gamma_from_nu(self.nu, m)
        try:
            np.linalg.cholesky(self.Sigma0)
        except np.linalg.LinAlgError:
            raise DomainError("Sigma0 is not positive definite")

    @property
    def m(self):
        return self.spec.m

    @property
    def gamma(self):
        return gamma_from_nu(self.nu, self.spec.m)

    def replace(self, **kwargs):
        """Returns a copy with some fields replaced."""
        fields = dict(lambdas=self.lambdas, sigma_y=self.sigma_y,
                      alpha=self.alpha.copy(), nu=self.nu,
                      beta0=self.beta0.copy(), Sigma0=self.Sigma0.copy())
        fields.update(kwargs)
        spec = fields.pop("spec", self.spec)
        return Params(spec, **fields)

    def scalars(self):
        """The scalar parameters reported in posterior summaries, as an
        ordered list of (name, value) pairs."""
        pairs = [("lambda{0}".format(i + 1), v) for i, v in enumerate(self.lambdas)]
        pairs.append(("sigma_y", self.sigma_y))
        pairs += [("alpha{0}".format(i + 1), v) for i, v in enumerate(self.alpha)]
        if self.spec.sv:
            pairs.append(("nu", self.nu))
        return pairs

    def to_text(self):
        m = self.spec.m
        lines = ["m={0}".format(m), "sv={0}".format(str(self.spec.sv).lower())]
        lines += ["lambda{0}={1!r}".format(i + 1, v) for i, v in enumerate(self.lambdas)]
        lines.append("sigma_y={0!r}".format(self.sigma_y))
        lines += ["alpha{0}={1!r}".format(i + 1, float(v)) for i, v in enumerate(self.alpha)]
        if self.nu is not None:
            lines.append("nu={0!r}".format(self.nu))
        lines += ["beta0_{0}={1!r}".format(i + 1, float(v)) for i, v in enumerate(self.beta0)]
        lines.append("sigma0=" + ",".join(repr(float(v)) for v in _lower_triangle(self.Sigma0)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, values):
        """Builds a bundle from the flat key=value mapping used by
        parameter files. Missing alpha and beta0 entries default to 0."""
        try:
            parsed = validate(_params_schema, values)
        except ValueError as err:
            raise DomainError("Invalid parameters: {0}".format(err))

        spec = ModelSpec(parsed["m"], parsed.get("sv", True))
        m = spec.m
        lambdas = [parsed["lambda1"]]
        if m == 4:
            if "lambda2" not in parsed:
                raise DomainError("lambda2 is required for m=4")
            lambdas.append(parsed["lambda2"])

        def vector(prefix):
            return [float(values.get("{0}{1}".format(prefix, i + 1), 0.0))
                    for i in range(m)]

        return cls(spec, lambdas, parsed["sigma_y"], alpha=vector("alpha"),
                   nu=parsed.get("nu"), beta0=vector("beta0_"),
                   Sigma0=_from_lower_triangle(parsed["sigma0"], m))

    @classmethod
    def from_text(cls, text):
        return cls.from_dict(parse_keyvalue(text, "parameter file", DomainError))

    def __repr__(self):
        body = ", ".join("{0}={1:.6g}".format(k, v) for k, v in self.scalars())
        return "<Params {0} {1}>".format(self.spec.name, body)


def price_moments(params, factor_mean, factor_cov, tau_grid):
    """Model-implied mean and variance of log prices over a grid of
    maturities, given the mean and covariance of the factors."""
    Z = loading_matrix(np.asarray(tau_grid, dtype=float), params.lambdas, params.m)
    factor_mean = np.asarray(factor_mean, dtype=float)
    factor_cov = np.asarray(factor_cov, dtype=float)

    mean = Z @ factor_mean
    variance = np.einsum("ij,jk,ik->i", Z, factor_cov, Z) + params.sigma_y ** 2
    return mean, variance


def innovation_cov(params):
    """Unconditional covariance of the factor innovations implied by
    Sigma0."""
    if params.spec.sv:
        return params.Sigma0 / (params.nu - params.m)
    return params.Sigma0


def ewma_innovation_cov(eta, params):
    """One-step forecasts of the innovation covariance, E(H_{t+1}^-1 | beta_{1:t}).

    Row t of the result (t = 0..T) is the forecast for period t+1 made
    after observing eta_1..eta_t, starting from Sigma0 / (nu - m).
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    gamma = params.gamma
    out = np.empty((eta.shape[0] + 1, params.m, params.m))
    out[0] = params.Sigma0 / (params.nu - params.m)
    for t, e in enumerate(eta):
        out[t + 1] = (1.0 - gamma) * np.outer(e, e) + gamma * out[t]

    return out


def log_prior_terms(params):
    """Per-block log prior contributions.

    Flat priors contribute 0 inside their support and -inf outside.
    The sigma_y entry is the Gamma(1, 1) log density of 1/sigma_y^2.
    Without stochastic volatility Sigma0 has the inverse Wishart prior of
    :func:`sigma0_prior_scale`; with it Sigma0 is a point mass at
    0.1^2 I.
    """
    spec = params.spec
    m = spec.m
    lo, hi = LAMBDA_SUPPORT
    lambdas = np.asarray(params.lambdas)
    terms = {}

    inside = np.all((lambdas >= lo) & (lambdas <= hi))
    if m == 4:
        inside = inside and lambdas[1] > lambdas[0]
    terms["lambda"] = 0.0 if inside else -np.inf

    if spec.sv:
        terms["nu"] = 0.0 if params.nu > m + 1 else -np.inf

    if params.sigma_y > 0:
        terms["sigma_y"] = -1.0 / params.sigma_y ** 2
    else:
        terms["sigma_y"] = -np.inf

    terms["alpha"] = multivariate_normal.logpdf(
        params.alpha, mean=np.zeros(m), cov=ALPHA_PRIOR_SD ** 2 * np.eye(m))
    terms["beta0"] = multivariate_normal.logpdf(
        params.beta0, mean=np.zeros(m), cov=BETA0_PRIOR_VAR * np.eye(m))

    if spec.sv:
        fixed = np.allclose(params.Sigma0, SIGMA0_SV * np.eye(m))
        terms["Sigma0"] = 0.0 if fixed else -np.inf
    else:
        terms["Sigma0"] = invwishart.logpdf(params.Sigma0, df=m + 10,
                                            scale=sigma0_prior_scale(m))

    return terms


def log_prior(params, spec=None):
    """Log prior density up to constants; -inf outside the support."""
    if spec is not None and spec != params.spec:
        params = params.replace(spec=spec)
    return float(sum(log_prior_terms(params).values()))
