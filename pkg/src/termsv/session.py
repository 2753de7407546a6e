from . import __version__
from .exceptions import DomainError
from .forecast import BacktestConfig, Portfolio, default_portfolios, rolling_backtest
from .gibbs import GibbsConfig, run_chain
from .likelihood import (SmcConfig, dic, loglik_no_sv, make_evaluator,
                         reduced_gibbs_moments, smc_loglik)
from .logger import Logger
from .options import Options
from .samplers import RngStream
from .validate import boolean, floats


def _float_tuple(value):
    return tuple(floats(value))


#: Converters for options given as strings, e.g. from config files
OPTION_PARSERS = {
    "gibbs-adapt": boolean,
    "var-levels": _float_tuple,
    "benchmark-lambdas": _float_tuple,
}


class TermSV(object):
    """A termsv session keeps track of options and log settings and
    builds the per-module configurations from them."""

    def __init__(self):
        self.options = Options({
            "gibbs-iterations": 11000,
            "gibbs-burnin": 1000,
            "gibbs-rw-lambda": 0.05,
            "gibbs-rw-nu": 0.3,
            "gibbs-adapt": True,
            "gibbs-keep-states": 0,
            "smc-particles": 10000,
            "smc-cycles": 50,
            "smc-df": 4.0,
            "smc-replicates": 1,
            "smc-resample": "always",
            "dic-thin": 20,
            "dic-draws": None,
            "forecast-draws": 10000,
            "backtest-update": "warm",
            "backtest-cycles": 500,
            "benchmark-lambdas": None,
            "seed": 0,
            "threads": 1,
            "var-levels": (0.01, 0.05, 0.10),
        }, parsers=OPTION_PARSERS)
        self.logger = Logger()

    def set_option(self, key, value):
        """Sets general options used by this session.

        :param key: key of the option
        :param value: value to set the option to

        Unknown keys raise :exc:`DomainError`.


        **Available options**:

        ======================= =========================================
        gibbs-iterations        (int) Gibbs cycles including burn-in,
                                default: ``11000``

        gibbs-burnin            (int) Cycles discarded as burn-in,
                                default: ``1000``

        gibbs-rw-lambda         (float) Initial random walk step on
                                ln(lambda), default: ``0.05``

        gibbs-rw-nu             (float) Initial random walk step on
                                ln(nu - m - 1), default: ``0.3``

        gibbs-adapt             (bool) Adapt step sizes during burn-in,
                                default: ``True``

        gibbs-keep-states       (int) Full state paths kept from the end
                                of the chain, default: ``0``

        smc-particles           (int) Particles of the likelihood
                                filter, default: ``10000``

        smc-cycles              (int) Parameter-fixed Gibbs cycles used
                                to build the proposals, default: ``50``

        smc-df                  (float) Degrees of freedom of the t
                                proposals, default: ``4.0``

        smc-replicates          (int) Independent filter runs averaged
                                into one estimate, default: ``1``

        smc-resample            (str) ``always`` or ``adaptive``,
                                default: ``always``

        dic-thin                (int) Evaluate the likelihood at every
                                n-th draw, default: ``20``

        dic-draws               (int) Cap on the number of draws
                                evaluated, default: no cap

        forecast-draws          (int) Factor draws per forecast origin,
                                default: ``10000``, raised to
                                100 / lowest VaR level when smaller

        backtest-update         (str) ``warm`` (short chains started
                                from the previous origin) or ``full``,
                                default: ``warm``

        backtest-cycles         (int) Cycles of the warm started chains,
                                default: ``500``

        benchmark-lambdas       (tuple) Decay rates of the extracted
                                factor benchmark, default: the model's
                                posterior mean

        seed                    (int) Master seed, default: ``0``

        threads                 (int) The size of the thread pools used
                                for replicates, DIC draws and backtest
                                origins, default: ``1``

        var-levels              (tuple or str) VaR levels, e.g.
                                ``0.01,0.05,0.10``
        ======================= =========================================

        """
        self.options.set(key, value)

    def get_option(self, key):
        """Returns current value of specified option.

        :param key: key of the option

        """
        return self.options.get(key)

    def set_loglevel(self, level):
        """Sets the log level used by this session.

        Valid levels are: "none", "error", "warning", "info"
        and "debug".

        :param level: level of logging to output

        """
        self.logger.set_level(level)

    def set_logoutput(self, output):
        """Sets the log output used by this session.

        :param output: a file-like object with a write method

        """
        self.logger.set_output(output)

    def gibbs_config(self, **kwargs):
        config = GibbsConfig(n_iterations=self.get_option("gibbs-iterations"),
                             n_burnin=self.get_option("gibbs-burnin"),
                             rw_scale_lambda=self.get_option("gibbs-rw-lambda"),
                             rw_scale_nu=self.get_option("gibbs-rw-nu"),
                             adapt_during_burnin=self.get_option("gibbs-adapt"),
                             keep_states=self.get_option("gibbs-keep-states"),
                             seed=self.get_option("seed"))
        return config.replace(**kwargs) if kwargs else config

    def smc_config(self, **kwargs):
        config = SmcConfig(n_particles=self.get_option("smc-particles"),
                           proposal_df=self.get_option("smc-df"),
                           reduced_gibbs_cycles=self.get_option("smc-cycles"),
                           resample=self.get_option("smc-resample"),
                           replicates=self.get_option("smc-replicates"),
                           seed=self.get_option("seed"),
                           threads=self.get_option("threads"))
        return config.replace(**kwargs) if kwargs else config

    def backtest_config(self, portfolios=None):
        return BacktestConfig(update=self.get_option("backtest-update"),
                              gibbs=self.gibbs_config(),
                              warm_cycles=self.get_option("backtest-cycles"),
                              reduced_cycles=self.get_option("smc-cycles"),
                              forecast_draws=self.get_option("forecast-draws"),
                              levels=self.get_option("var-levels"),
                              portfolios=portfolios,
                              seed=self.get_option("seed"),
                              threads=self.get_option("threads"),
                              benchmark_lambdas=self.get_option("benchmark-lambdas"))

    def estimate(self, panel, spec, init=None):
        """Runs a Gibbs chain with the session options."""
        logger = self.logger.new_module("gibbs")
        with logger.timed("Chain for {0}".format(spec.name)):
            return run_chain(panel, spec, self.gibbs_config(), init=init, logger=logger)

    def loglik(self, panel, params):
        """Log likelihood at ``params``: closed form without stochastic
        volatility, a particle filter estimate (an :class:`SmcResult`)
        with it."""
        if not params.spec.sv:
            return loglik_no_sv(panel, params)

        config = self.smc_config()
        stream = RngStream(config.seed, "loglik")
        proposals = reduced_gibbs_moments(panel, params, config.reduced_gibbs_cycles,
                                          stream.substream(0), config.proposal_df,
                                          config.reduced_gibbs_burnin)
        logger = self.logger.new_module("smc")
        with logger.timed("Particle filter"):
            return smc_loglik(panel, params, proposals, config, stream.substream(1), logger)

    def dic(self, panel, posterior):
        logger = self.logger.new_module("dic")
        evaluator = make_evaluator(posterior.spec, self.smc_config(replicates=1),
                                   logger.new_module("smc"))
        with logger.timed("DIC of {0}".format(posterior.spec.name)):
            return dic(panel, posterior, evaluator, self.get_option("dic-draws"),
                       self.get_option("dic-thin"), self.get_option("threads"), logger)

    def backtest(self, panel, spec, start, stop=None, portfolios=None):
        if portfolios is not None:
            for portfolio in portfolios:
                if not isinstance(portfolio, Portfolio):
                    raise DomainError("Expected Portfolio, got {0!r}".format(portfolio))
        logger = self.logger.new_module("backtest")
        config = self.backtest_config(portfolios or default_portfolios(panel.N))
        with logger.timed("Backtest of {0}".format(spec.name)):
            return rolling_backtest(panel, spec, start, stop, config, logger)

    @property
    def version(self):
        return __version__


__all__ = ["TermSV"]
