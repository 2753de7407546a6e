"""Futures price panels.

A panel holds log prices of N perpetual contracts over T dates together
with their time to maturity in calendar days. Perpetual series are
rolled over to the next monthly contract on roll-over days, where every
maturity jumps up by the contract spacing.
"""

import os

from collections import namedtuple

import numpy as np
import pandas as pd

from .exceptions import DataError, InsufficientDataError, LoadError
from .model import gamma_from_nu, loading_matrix
from .samplers import RngStream, cholesky, sample_precision_transition, sample_wishart
from .validate import all, transform, optional, positive, parse_keyvalue

__all__ = ["PanelData", "MaturitySchedule", "DEFAULT_SCHEDULE",
           "build_maturity_schedule", "load_panel", "load_schedule",
           "save_panel", "term_structure_stats", "simulate_panel"]

SCHEDULE_SUFFIX = ".schedule"


_MaturitySchedule = namedtuple("MaturitySchedule",
                               "base_maturity_days contract_spacing_days "
                               "rollover_period_days rollover_offset_days")


class MaturitySchedule(_MaturitySchedule):
    """Maturity layout of a perpetual contract panel.

    Contract 1 has ``base_maturity_days`` to go on the first date and
    contract i is ``(i - 1) * contract_spacing_days`` further out. A
    roll-over happens at observation i >= 1 whenever
    ``i + rollover_offset_days`` is a multiple of ``rollover_period_days``.
    """

    def __new__(cls, base_maturity_days, contract_spacing_days,
                rollover_period_days, rollover_offset_days=0):
        values = (int(base_maturity_days), int(contract_spacing_days),
                  int(rollover_period_days))
        if min(values) <= 0:
            raise DataError("Schedule fields must be positive, got {0}".format(values))
        if int(rollover_offset_days) < 0:
            raise DataError("rollover_offset_days must be non-negative")

        return super(MaturitySchedule, cls).__new__(cls, *(values + (int(rollover_offset_days),)))

    def to_text(self):
        return "".join("{0}={1}\n".format(k, v) for k, v in self._asdict().items())


#: Monthly roll-overs every 21 trading days, first one on the second date
DEFAULT_SCHEDULE = MaturitySchedule(22, 30, 21, 20)

_schedule_schema = {
    "base_maturity_days": all(transform(int), positive),
    "contract_spacing_days": all(transform(int), positive),
    "rollover_period_days": all(transform(int), positive),
    optional("rollover_offset_days"): transform(int),
}


class PanelData(object):
    """A complete T x N panel of log futures prices."""

    def __init__(self, dates, prices, maturities, rollover_flags):
        self.dates = pd.DatetimeIndex(dates)
        self.prices = np.asarray(prices, dtype=float)
        self.maturities = np.asarray(maturities, dtype=float)
        self.rollover_flags = np.asarray(rollover_flags, dtype=bool)
        self.check()

    def check(self):
        if self.prices.ndim != 2:
            raise DataError("Prices must be a T x N matrix")
        if self.prices.shape != self.maturities.shape:
            raise DataError("Prices {0} and maturities {1} differ in shape".format(
                self.prices.shape, self.maturities.shape))
        if len(self.dates) != self.T or len(self.rollover_flags) != self.T:
            raise DataError("Dates and roll-over flags must have length {0}".format(self.T))
        if not np.all(np.isfinite(self.prices)):
            raise DataError("Prices must be finite")
        if not np.all(self.maturities > 0):
            raise DataError("Maturities must be positive")

    @property
    def T(self):
        return self.prices.shape[0]

    @property
    def N(self):
        return self.prices.shape[1]

    def loadings(self, lambdas, m):
        """Loading matrices Z_t stacked into a (T, N, m) array."""
        return loading_matrix(self.maturities, lambdas, m)

    def slice(self, start=None, stop=None):
        """A sub-panel over dates [start, stop)."""
        s = slice(start, stop)
        return PanelData(self.dates[s], self.prices[s], self.maturities[s],
                         self.rollover_flags[s])

    def to_frame(self):
        """The panel in long format, one row per (date, contract)."""
        T, N = self.prices.shape
        return pd.DataFrame({
            "date": np.repeat(self.dates.strftime("%Y-%m-%d"), N),
            "contract": np.tile(np.arange(1, N + 1), T),
            "log_price": self.prices.ravel(),
            "maturity_days": self.maturities.ravel(),
        })

    def __repr__(self):
        return "<PanelData(T={0}, N={1}, rollovers={2})>".format(
            self.T, self.N, int(self.rollover_flags.sum()))


def build_maturity_schedule(schedule, dates, n_contracts=1):
    """Maturities (T x n_contracts) and roll-over flags for a date range."""
    dates = pd.DatetimeIndex(dates)
    T = len(dates)
    if T == 0:
        raise DataError("No dates given")

    gaps = np.diff(dates.values).astype("timedelta64[D]").astype(int)
    if np.any(gaps <= 0):
        raise DataError("Dates must be strictly increasing")

    index = np.arange(T)
    flags = ((index + schedule.rollover_offset_days)
             % schedule.rollover_period_days == 0) & (index >= 1)

    base = np.empty(T)
    base[0] = schedule.base_maturity_days
    for i in range(1, T):
        base[i] = base[i - 1] - gaps[i - 1]
        if flags[i]:
            base[i] += schedule.contract_spacing_days

    offsets = schedule.contract_spacing_days * np.arange(n_contracts)
    maturities = base[:, None] + offsets[None, :]
    if np.any(maturities <= 0):
        bad = int(np.argmax(np.any(maturities <= 0, axis=1)))
        raise DataError("Schedule produces a non-positive maturity on {0}".format(
            dates[bad].date()))

    return maturities, flags


def load_schedule(path):
    """Reads a key=value schedule sidecar file."""
    with open(path) as fd:
        values = parse_keyvalue(fd.read(), "schedule file " + path,
                                DataError, _schedule_schema)

    return MaturitySchedule(**values)


def _sidecar_path(path):
    return os.path.splitext(path)[0] + SCHEDULE_SUFFIX


def load_panel(path, format="auto", sep=","):
    """Loads a long-format panel with one row per (date, contract).

    Columns are ``date``, ``contract``, then ``price`` (raw, natural log
    is applied) or ``log_price``, and ``maturity_days``. Without a
    maturity column the maturities are built from a sidecar schedule
    file with the same stem and a ``.schedule`` suffix.
    """
    try:
        frame = pd.read_csv(path, sep=sep, comment="#")
    except (OSError, ValueError) as err:
        raise LoadError("Unable to read panel {0}: {1}".format(path, err))

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    if format == "auto":
        format = "log_price" if "log_price" in frame.columns else "price"
    if format not in ("price", "log_price"):
        raise LoadError("Unknown panel format: {0}".format(format))

    missing = {"date", "contract", format} - set(frame.columns)
    if missing:
        raise LoadError("Panel {0} lacks column(s): {1}".format(
            path, ", ".join(sorted(missing))))

    frame["date"] = pd.to_datetime(frame["date"])
    if frame.duplicated(["date", "contract"]).any():
        row = frame[frame.duplicated(["date", "contract"])].iloc[0]
        raise LoadError("Duplicate observation for (date {0}, contract {1})".format(
            row["date"].date(), row["contract"]), row["date"].date(), row["contract"])

    values = frame[format].astype(float)
    if format == "price":
        if (values <= 0).any():
            raise DataError("Prices must be positive")
        values = np.log(values)
    frame["value"] = values

    grid = frame.pivot(index="date", columns="contract", values="value").sort_index()
    grid = grid.reindex(columns=sorted(grid.columns))
    holes = np.argwhere(grid.isna().values)
    if len(holes):
        i, j = holes[0]
        raise LoadError.missing_cell(grid.index[i].date(), grid.columns[j])

    dates = grid.index
    if "maturity_days" in frame.columns:
        maturities = frame.pivot(index="date", columns="contract",
                                 values="maturity_days").reindex(
            index=dates, columns=grid.columns).values.astype(float)
        if np.isnan(maturities).any() or not np.all(maturities > 0):
            raise DataError("Maturities must be present and positive")
        jumps = np.diff(maturities, axis=0) > 0
        if not np.all(jumps == jumps[:, :1]):
            raise DataError("Contracts disagree on roll-over days")
        flags = np.concatenate([[False], jumps[:, 0]])
    else:
        sidecar = _sidecar_path(path)
        if not os.path.exists(sidecar):
            raise LoadError("Panel {0} has no maturity column and no "
                            "schedule file {1}".format(path, sidecar))
        maturities, flags = build_maturity_schedule(load_schedule(sidecar), dates,
                                                    grid.shape[1])

    return PanelData(dates, grid.values, maturities, flags)


def save_panel(panel, path, schedule=None, header=None):
    """Writes a panel in long format after optional # header lines; a
    schedule is written to the sidecar file when given."""
    with open(path, "w") as fd:
        for line in header or []:
            fd.write("# {0}\n".format(line))
        panel.to_frame().to_csv(fd, index=False, float_format="%.10g")
    if schedule is not None:
        with open(_sidecar_path(path), "w") as fd:
            fd.write(schedule.to_text())


def _partition_stats(prices, mask, name):
    rows = prices[mask]
    if rows.shape[0] < 2:
        raise InsufficientDataError("Need at least 2 observations for the "
                                    "'{0}' partition, got {1}".format(name, rows.shape[0]))
    return rows.mean(axis=0), rows.var(axis=0, ddof=1)


def term_structure_stats(panel):
    """Per-contract sample mean and variance of log prices over all
    dates, over roll-over days and over the days following them."""
    if panel.T == 0:
        raise InsufficientDataError("Empty panel")

    flags = panel.rollover_flags
    after = np.zeros_like(flags)
    after[1:] = flags[:-1]

    stats = {"contract": np.arange(1, panel.N + 1)}
    partitions = [("all", np.ones_like(flags)), ("rollover", flags), ("after", after)]
    for name, mask in partitions:
        mean, var = _partition_stats(panel.prices, mask, name)
        stats["mean_" + name] = mean
        stats["var_" + name] = var

    columns = ["contract", "mean_all", "var_all", "mean_rollover",
               "var_rollover", "mean_after", "var_after"]
    return pd.DataFrame(stats, columns=columns)


def simulate_panel(params, schedule=DEFAULT_SCHEDULE, T=1000, N=24, seed=0,
                   start="2000-01-03"):
    """Forward-simulates a panel and its latent states from the model.

    Returns ``(panel, state)``; the state is a StatePath with the true
    factor path beta_0..beta_T, and with stochastic volatility, the
    precision path H_1..H_T and its forward filter.
    """
    from .gibbs import StatePath, forward_filter_Sigma

    spec = params.spec
    m = spec.m
    if spec.sv:
        gamma = gamma_from_nu(params.nu, m)

    rng = RngStream(seed)
    dates = pd.bdate_range(start, periods=T)
    maturities, flags = build_maturity_schedule(schedule, dates, N)
    Z = loading_matrix(maturities, params.lambdas, m)

    z = rng.standard_normal((T, m))
    if spec.sv:
        H = np.empty((T, m, m))
        H[0] = sample_wishart(params.nu, np.linalg.inv(gamma * params.Sigma0), rng)
        for t in range(1, T):
            H[t] = sample_precision_transition(H[t - 1], params.nu, gamma, rng)
        upper = np.swapaxes(cholesky(H, "Precision"), -1, -2)
        eta = np.linalg.solve(upper, z[..., None])[..., 0]
    else:
        H = None
        eta = z @ cholesky(params.Sigma0, "Sigma0").T

    beta = np.empty((T + 1, m))
    beta[0] = params.beta0
    beta[1:] = params.beta0 + np.cumsum(params.alpha + eta, axis=0)

    noise = params.sigma_y * rng.standard_normal((T, N))
    prices = np.einsum("tij,tj->ti", Z, beta[1:]) + noise

    panel = PanelData(dates, prices, maturities, flags)
    Sigma_filter = forward_filter_Sigma(beta, params) if spec.sv else None
    return panel, StatePath(beta, H, Sigma_filter)
