"""Distribution primitives.

Gaussian simulation through banded precision matrices, Wishart draws
(full rank, rank 1, inverse), singular Beta innovations, the precision
transition of the Wishart volatility process, multivariate t densities
and Gamma draws.

Square roots follow the upper Cholesky convention H = U'U.
"""

import re
import zlib

import numpy as np

from numpy.linalg import LinAlgError
from scipy.linalg import cholesky_banded, cho_solve_banded, solve_banded
from scipy.special import gammaln

from .exceptions import DomainError, NumericalError

__all__ = ["RngStream", "BandedPrecision", "sample_gaussian_banded",
           "sample_wishart", "sample_rank1_wishart", "sample_singular_beta",
           "sample_precision_transition", "mvt_logpdf", "sample_mvt",
           "sample_gamma", "sample_inverse_gamma", "sample_inverse_wishart",
           "inverse_wishart_mean", "cholesky"]

_pivot_re = re.compile(r"(\d+)")


def _key_part(part):
    """Spawn keys are unsigned; names hash to a 32-bit word."""
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) % 2 ** 64


class RngStream(object):
    """A reproducible random stream identified by (seed, stream_id).

    Backed by a counter-based Philox generator keyed through
    :class:`numpy.random.SeedSequence`, so distinct stream ids give
    independent sequences and substreams can be split off for worker
    threads. Attribute access falls through to the underlying
    :class:`numpy.random.Generator`.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = stream_id
        self.generator = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=self.key))
        )

    @property
    def key(self):
        parts = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return tuple(_key_part(part) for part in parts)

    def substream(self, index):
        """Returns an independent child stream."""
        return RngStream(self.seed, self.key + (int(index),))

    def __getattr__(self, name):
        return getattr(self.generator, name)

    def __repr__(self):
        return "<RngStream(seed={0}, stream_id={1!r})>".format(self.seed, self.stream_id)


def cholesky(matrix, what="matrix"):
    """Lower Cholesky factor, batched over leading dimensions."""
    try:
        return np.linalg.cholesky(matrix)
    except LinAlgError as err:
        raise NumericalError("{0} is not positive definite: {1}".format(what, err))


def _check_square(scale):
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    if scale.shape[-1] != scale.shape[-2]:
        raise DomainError("Scale matrix must be square, got shape {0}".format(scale.shape))
    return scale


class BandedPrecision(object):
    """A symmetric positive definite precision matrix in lower band storage.

    The matrix is block tridiagonal in ``block_size`` x ``block_size``
    blocks, so its scalar bandwidth is ``2 * block_size - 1``. Either a
    ``mean`` or a ``linear`` term b (mean = P^-1 b) may be attached.
    """

    def __init__(self, band, block_size, linear=None, mean=None):
        self.band = np.asarray(band, dtype=float)
        self.block_size = block_size
        self.linear = None if linear is None else np.asarray(linear, dtype=float)
        self._mean = None if mean is None else np.asarray(mean, dtype=float)
        self._factor = None

    @classmethod
    def from_blocks(cls, diag, sub, linear=None, mean=None):
        """Builds the band from diagonal blocks (nb, m, m) and
        subdiagonal blocks (nb - 1, m, m), sub[k] being block (k+1, k)."""
        diag = np.asarray(diag, dtype=float)
        sub = np.asarray(sub, dtype=float)
        nb, m = diag.shape[0], diag.shape[1]
        band = np.zeros((2 * m, nb * m))

        for r in range(m):
            for c in range(m):
                if r >= c:
                    band[r - c, c::m] = diag[:, r, c]
                if nb > 1:
                    band[m + r - c, c::m][:nb - 1] = sub[:, r, c]

        return cls(band, m, linear=linear, mean=mean)

    @classmethod
    def from_dense(cls, matrix, block_size=None, linear=None, mean=None):
        matrix = np.asarray(matrix, dtype=float)
        n = matrix.shape[0]
        if block_size is None:
            block_size = n
        u = min(2 * block_size - 1, n - 1)
        band = np.zeros((u + 1, n))
        for d in range(u + 1):
            band[d, :n - d] = np.diagonal(matrix, -d)

        return cls(band, block_size, linear=linear, mean=mean)

    @property
    def dimension(self):
        return self.band.shape[1]

    @property
    def bandwidth(self):
        return self.band.shape[0] - 1

    def factor(self):
        """Lower band Cholesky factor, computed once."""
        if self._factor is None:
            try:
                self._factor = cholesky_banded(self.band, lower=True,
                                               check_finite=False)
            except LinAlgError as err:
                match = _pivot_re.search(str(err))
                pivot = int(match.group(1)) if match else None
                raise NumericalError("Precision matrix is not positive definite",
                                     pivot=pivot)

        return self._factor

    def logdet(self):
        return 2.0 * np.sum(np.log(self.factor()[0]))

    def solve(self, b):
        return cho_solve_banded((self.factor(), True), b, check_finite=False)

    @property
    def mean(self):
        if self._mean is None:
            if self.linear is None:
                self._mean = np.zeros(self.dimension)
            else:
                self._mean = self.solve(self.linear)

        return self._mean

    def solve_upper(self, z):
        """Solves L'x = z where LL' is the precision."""
        chol = self.factor()
        u = chol.shape[0] - 1
        n = chol.shape[1]
        upper = np.zeros_like(chol)
        for d in range(u + 1):
            upper[u - d, d:] = chol[d, :n - d]

        return solve_banded((0, u), upper, z, check_finite=False)

    def to_dense(self):
        n = self.dimension
        dense = np.zeros((n, n))
        for d in range(self.band.shape[0]):
            idx = np.arange(n - d)
            dense[idx + d, idx] = self.band[d, :n - d]
            dense[idx, idx + d] = self.band[d, :n - d]

        return dense


def sample_gaussian_banded(prec, rng, size=None):
    """Draws from N(mean, P^-1) by back-substitution through the band
    Cholesky factor of P. Cost is linear in the dimension."""
    n = prec.dimension
    if size is None:
        z = rng.standard_normal(n)
        return prec.mean + prec.solve_upper(z)

    z = rng.standard_normal((n, size))
    draws = prec.solve_upper(z)
    return (draws + prec.mean[:, None]).T


def sample_wishart(df, scale, rng, size=None):
    """Wishart W_m(df, scale) with mean df * scale via the Bartlett
    decomposition; df may be non-integer but must exceed m - 1."""
    scale = _check_square(scale)
    m = scale.shape[0]
    if not df > m - 1:
        raise DomainError("Wishart degrees of freedom must exceed {0}, "
                          "got {1}".format(m - 1, df))

    chol = cholesky(scale, "Wishart scale")
    shape = (1 if size is None else size, m)

    bartlett = np.zeros(shape + (m,))
    diag = np.sqrt(rng.chisquare(df - np.arange(m), size=shape))
    bartlett[..., np.arange(m), np.arange(m)] = diag
    if m > 1:
        rows, cols = np.tril_indices(m, -1)
        bartlett[..., rows, cols] = rng.standard_normal(shape[:1] + (len(rows),))

    factor = chol @ bartlett
    draws = factor @ np.swapaxes(factor, -1, -2)
    draws = 0.5 * (draws + np.swapaxes(draws, -1, -2))

    return draws[0] if size is None else draws


def sample_rank1_wishart(scale, rng, size=None):
    """Singular Wishart W_m(1, scale): the outer product zz' of
    z ~ N(0, scale)."""
    scale = _check_square(scale)
    m = scale.shape[0]
    chol = cholesky(scale, "Wishart scale")
    z = rng.standard_normal((1 if size is None else size, m)) @ chol.T
    draws = z[:, :, None] * z[:, None, :]

    return draws[0] if size is None else draws


def sample_singular_beta(nu, m, rng, size=None):
    """Singular matrix Beta B_m(nu/2, 1/2) innovation.

    Built as Psi = U^-T A U^-1 with A ~ W_m(nu, I), B ~ W_m(1, I) and
    U'U = A + B, so that I - Psi = U^-T B U^-1 has rank one.
    """
    if not nu > m - 1:
        raise DomainError("Singular Beta requires nu > {0}, got {1}".format(m - 1, nu))

    eye = np.eye(m)
    n = 1 if size is None else size
    a = sample_wishart(nu, eye, rng, size=n)
    b = sample_rank1_wishart(eye, rng, size=n)
    upper = np.swapaxes(cholesky(a + b, "A + B"), -1, -2)
    upper_inv = np.linalg.inv(upper)
    psi = np.swapaxes(upper_inv, -1, -2) @ a @ upper_inv
    psi = 0.5 * (psi + np.swapaxes(psi, -1, -2))

    return psi[0] if size is None else psi


def sample_precision_transition(H_prev, nu, gamma, rng, size=None):
    """One step of the scaled singular Beta process,
    H_t = U' Psi U / gamma with U the upper Cholesky factor of H_{t-1}."""
    H_prev = _check_square(H_prev)
    m = H_prev.shape[-1]
    lower = cholesky(H_prev, "Precision")
    psi = sample_singular_beta(nu, m, rng, size=size)
    H = lower @ psi @ np.swapaxes(lower, -1, -2) / gamma

    return 0.5 * (H + np.swapaxes(H, -1, -2))


def mvt_logpdf(x, location, scale, df):
    """Log density of the multivariate t with dispersion matrix ``scale``.

    Broadcasts over leading dimensions of x, location and scale.
    """
    x = np.asarray(x, dtype=float)
    location = np.asarray(location, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if location.ndim == 0:
        location = location.reshape(1)
    if scale.ndim < 2:
        scale = np.reshape(scale, (1, 1))
    if not df > 0:
        raise DomainError("t degrees of freedom must be positive, got {0}".format(df))

    m = x.shape[-1]
    chol = cholesky(scale, "t scale")
    delta = x - location
    chol, delta = np.broadcast_arrays(chol, delta[..., None])
    solved = np.linalg.solve(chol, delta)[..., 0]
    maha = np.sum(solved ** 2, axis=-1)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)

    return (gammaln(0.5 * (df + m)) - gammaln(0.5 * df)
            - 0.5 * m * np.log(df * np.pi) - 0.5 * logdet
            - 0.5 * (df + m) * np.log1p(maha / df))


def sample_mvt(location, scale, df, rng, size=None):
    """Draws from the multivariate t with dispersion ``scale``."""
    location = np.atleast_1d(np.asarray(location, dtype=float))
    m = location.shape[-1]
    chol = cholesky(_check_square(scale), "t scale")
    n = 1 if size is None else size
    z = rng.standard_normal((n, m)) @ chol.T
    w = np.sqrt(rng.chisquare(df, size=n) / df)
    draws = location + z / w[:, None]

    return draws[0] if size is None else draws


def sample_gamma(shape, scale, rng, size=None):
    """Gamma with mean shape * scale."""
    if not (shape > 0 and scale > 0):
        raise DomainError("Gamma shape and scale must be positive")
    return rng.gamma(shape, scale, size=size)


def sample_inverse_gamma(shape, scale, rng, size=None):
    """Inverse Gamma with density proportional to x^-(shape+1) exp(-scale/x)."""
    if not (shape > 0 and scale > 0):
        raise DomainError("Inverse Gamma shape and scale must be positive")
    return 1.0 / rng.gamma(shape, 1.0 / scale, size=size)


def sample_inverse_wishart(df, scale, rng, size=None):
    """Inverse Wishart IW_m(df, scale): the inverse of a
    W_m(df, scale^-1) draw."""
    scale = _check_square(scale)
    precision = np.linalg.inv(scale)
    draws = np.linalg.inv(sample_wishart(df, 0.5 * (precision + precision.T),
                                         rng, size=size))
    return 0.5 * (draws + np.swapaxes(draws, -1, -2))


def inverse_wishart_mean(df, scale):
    scale = _check_square(scale)
    m = scale.shape[0]
    if not df > m + 1:
        raise DomainError("Inverse Wishart mean requires df > {0}".format(m + 1))
    return scale / (df - m - 1)
