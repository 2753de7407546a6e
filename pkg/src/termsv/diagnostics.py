"""Forecast evaluation statistics: residual autocorrelation, VaR
coverage tests, forecast error summaries and realized covariances."""

from collections import OrderedDict, namedtuple

import numpy as np

from numpy.lib.stride_tricks import sliding_window_view

from scipy.special import xlogy
from scipy.stats import chi2
from statsmodels.stats.diagnostic import acorr_ljungbox

from .exceptions import DegenerateInputError, InsufficientDataError

__all__ = ["TestResult", "ljung_box", "kupiec_uc", "christoffersen_ind",
           "christoffersen_cc", "rmsfe", "rmsfe_by_contract",
           "realized_covariance", "hit_rate", "significance_mark",
           "DEFAULT_BUCKETS", "LJUNG_BOX_LAGS"]

TestResult = namedtuple("TestResult", "statistic p_value df n")

LJUNG_BOX_LAGS = 10

#: Contract buckets of the forecast error tables, 1-based and inclusive
DEFAULT_BUCKETS = (("1-8", 1, 8), ("9-16", 9, 16), ("17-24", 17, 24))


def _result(statistic, df, n):
    statistic = max(float(statistic), 0.0)
    p_value = float(np.clip(chi2.sf(statistic, df), 0.0, 1.0))
    return TestResult(statistic, p_value, df, n)


def ljung_box(series, n_lags=LJUNG_BOX_LAGS):
    """Ljung-Box portmanteau test for autocorrelation up to ``n_lags``."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n <= n_lags + 1:
        raise InsufficientDataError("Ljung-Box with {0} lags needs more than {1} "
                                    "observations, got {2}".format(n_lags, n_lags + 1, n))

    if np.ptp(x) == 0:
        raise DegenerateInputError("Series has zero variance")

    table = acorr_ljungbox(x, lags=[n_lags])
    return _result(table["lb_stat"].iloc[-1], n_lags, n)


def _bernoulli_loglik(successes, failures, p):
    return xlogy(successes, p) + xlogy(failures, 1.0 - p)


def kupiec_uc(hits, alpha_star):
    """Kupiec's unconditional coverage likelihood ratio test."""
    hits = np.asarray(hits, dtype=bool)
    n = len(hits)
    if n == 0:
        raise InsufficientDataError("No hit observations")

    x = int(hits.sum())
    pi_hat = x / float(n)
    lr = -2.0 * (_bernoulli_loglik(x, n - x, alpha_star)
                 - _bernoulli_loglik(x, n - x, pi_hat))
    return _result(lr, 1, n)


def _transition_counts(hits):
    prev, curr = hits[:-1], hits[1:]
    n00 = int(np.sum(~prev & ~curr))
    n01 = int(np.sum(~prev & curr))
    n10 = int(np.sum(prev & ~curr))
    n11 = int(np.sum(prev & curr))
    return n00, n01, n10, n11


def christoffersen_ind(hits):
    """Christoffersen's test of serial independence of the hits against
    first-order Markov dependence. Empty transition counts drop out of
    the likelihoods."""
    hits = np.asarray(hits, dtype=bool)
    n = len(hits)
    if n < 2:
        raise InsufficientDataError("Independence test needs at least 2 hits")

    n00, n01, n10, n11 = _transition_counts(hits)
    pi01 = n01 / float(n00 + n01) if n00 + n01 else 0.0
    pi11 = n11 / float(n10 + n11) if n10 + n11 else 0.0
    pi = (n01 + n11) / float(n - 1)

    restricted = _bernoulli_loglik(n01 + n11, n00 + n10, pi)
    markov = _bernoulli_loglik(n01, n00, pi01) + _bernoulli_loglik(n11, n10, pi11)
    return _result(-2.0 * (restricted - markov), 1, n)


def christoffersen_cc(hits, alpha_star):
    """Conditional coverage: the sum of the unconditional coverage and
    independence statistics."""
    uc = kupiec_uc(hits, alpha_star)
    ind = christoffersen_ind(hits)
    return _result(uc.statistic + ind.statistic, 2, uc.n)


def hit_rate(hits):
    hits = np.asarray(hits, dtype=bool)
    if len(hits) == 0:
        raise InsufficientDataError("No hit observations")
    return float(hits.mean())


def significance_mark(p_value):
    """``**`` below 1%, ``*`` below 5%."""
    if p_value < 0.01:
        return "**"
    elif p_value < 0.05:
        return "*"
    return ""


def rmsfe_by_contract(errors):
    errors = np.atleast_2d(np.asarray(errors, dtype=float))
    if errors.shape[0] == 0:
        raise InsufficientDataError("No forecast errors")
    return np.sqrt(np.mean(errors ** 2, axis=0))


def rmsfe(errors, buckets=DEFAULT_BUCKETS):
    """Root mean squared forecast error per contract, averaged within
    each bucket of contracts. Buckets are clipped to the available
    contracts and dropped when empty; ``all`` covers every contract."""
    per_contract = rmsfe_by_contract(errors)
    N = len(per_contract)

    out = OrderedDict()
    for name, first, last in buckets:
        members = per_contract[first - 1:min(last, N)]
        if len(members):
            out[name] = float(members.mean())
    out["all"] = float(per_contract.mean())
    return out


def realized_covariance(factors, window=6):
    """Two-sided moving average of outer products of factor changes.

    Returns ``(positions, matrices)``: the positions in ``factors`` of
    the dates with a complete window and the realized covariance
    matrices at those dates.
    """
    factors = np.asarray(factors, dtype=float)
    if factors.ndim == 1:
        factors = factors[:, None]
    diffs = np.diff(factors, axis=0)
    width = 2 * window + 1
    if width > len(diffs):
        raise InsufficientDataError("Window of {0} changes needs more than {1} "
                                    "dates".format(width, len(factors)))

    outer = diffs[:, :, None] * diffs[:, None, :]
    matrices = sliding_window_view(outer, width, axis=0).mean(axis=-1)
    positions = np.arange(window, len(diffs) - window) + 1

    return positions, 0.5 * (matrices + np.swapaxes(matrices, -1, -2))
