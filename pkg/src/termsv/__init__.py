# coding: utf8
"""termsv estimates dynamic Nelson-Siegel and Svensson factor models of
commodity futures term structures with Wishart stochastic volatility.

The library provides panel handling, a collapsed Gibbs sampler, particle
filter likelihoods and DIC, one-step-ahead density and VaR forecasts
with their coverage tests, and slow reference implementations used to
check all of these. The main component is the ``termsv`` command-line
utility built on top of it.

"""


__title__ = "termsv"
__version__ = "0.4.0"
__license__ = "Simplified BSD"

from .data import (PanelData, MaturitySchedule, DEFAULT_SCHEDULE, load_panel,
                   save_panel, simulate_panel, term_structure_stats)
from .exceptions import (TermSVError, DataError, LoadError, DomainError,
                         NumericalError, SamplerError, ForecastError)
from .gibbs import GibbsConfig, PosteriorSample, run_chain, summarize
from .likelihood import SmcConfig, dic, loglik_no_sv, smc_loglik
from .model import ModelSpec, Params, loading_matrix
from .session import TermSV
