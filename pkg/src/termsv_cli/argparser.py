import argparse
import re

from string import printable
from textwrap import dedent

from termsv.validate import boolean

from .constants import COMMANDS, TERMSV_VERSION


_printable_re = re.compile("[{0}]".format(printable))
_option_re = re.compile(r"""
    (?P<name>[A-z-]+) # A option name, valid characters are A to z and dash.
    \s*
    (?P<op>=)? # Separating the option and the value with a equals sign is
               # common, but optional.
    \s*
    (?P<value>.*) # The value, anything goes.
""", re.VERBOSE)
_window_re = re.compile(r"^\s*(?P<start>\d*)\s*:\s*(?P<stop>\d*)\s*$")


class ArgumentParser(argparse.ArgumentParser):
    def convert_arg_line_to_args(self, line):
        # Strip any non-printable characters that might be in the
        # beginning of the line (e.g. Unicode BOM marker).
        match = _printable_re.search(line)
        if not match:
            return
        line = line[match.start():].strip()

        # Skip lines that do not start with a valid option (e.g. comments)
        option = _option_re.match(line)
        if not option:
            return

        name, value = option.group("name", "value")
        if name and value:
            yield "--{0}={1}".format(name, value)
        elif name:
            yield "--{0}".format(name)


class HelpFormatter(argparse.RawDescriptionHelpFormatter):
    """A nicer help formatter.

    Help for arguments can be indented and contain new lines.
    It will be de-dented and arguments in the help will be
    separated by a blank line for better readability.

    Originally written by Jakub Roztocil of the httpie project.
    """
    def __init__(self, max_help_position=4, *args, **kwargs):
        # A smaller indent for args help.
        kwargs["max_help_position"] = max_help_position
        argparse.RawDescriptionHelpFormatter.__init__(self, *args, **kwargs)

    def _split_lines(self, text, width):
        text = dedent(text).strip() + "\n\n"
        return text.splitlines()


def comma_list(values):
    return [val.strip() for val in values.split(",") if val.strip()]


def num(type, min=None, max=None):
    def func(value):
        value = type(value)

        if min is not None and not (value > min):
            raise argparse.ArgumentTypeError(
                "{0} value must be more than {1} but is {2}".format(
                    type.__name__, min, value
                )
            )

        if max is not None and not (value <= max):
            raise argparse.ArgumentTypeError(
                "{0} value must be at most {1} but is {2}".format(
                    type.__name__, max, value
                )
            )

        return value

    func.__name__ = type.__name__

    return func


def levels(value):
    try:
        values = tuple(float(v) for v in comma_list(value))
    except ValueError:
        raise argparse.ArgumentTypeError("invalid level list: {0}".format(value))

    if not values or not all(0 < v < 1 for v in values):
        raise argparse.ArgumentTypeError("levels must lie in (0, 1): {0}".format(value))

    return tuple(sorted(values))


def window(value):
    """Parses START:END, either side may be empty."""
    match = _window_re.match(value)
    if not match:
        raise argparse.ArgumentTypeError("window must be START:END, got {0}".format(value))

    start, stop = match.group("start", "stop")
    return (int(start) if start else None, int(stop) if stop else None)


def switch(value):
    try:
        return boolean(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected on or off, got {0}".format(value))


def model(value):
    value = value.strip().lower()
    if value not in ("3f", "4f"):
        raise argparse.ArgumentTypeError("model must be 3f or 4f, got {0}".format(value))

    return int(value[0])


parser = ArgumentParser(
    fromfile_prefix_chars="@",
    formatter_class=HelpFormatter,
    add_help=False,
    usage="%(prog)s [OPTIONS] COMMAND [INPUT ...]",
    description=dedent("""
    termsv is a command-line utility that fits dynamic Nelson-Siegel and
    Svensson factor models with Wishart stochastic volatility to panels
    of futures prices, evaluates them and backtests their forecasts.

    Commands:
      simulate    simulate a panel, its parameters and latent states
      estimate    run the Gibbs sampler on PANEL
      loglik      log likelihood of PANEL at --params or --draws
      dic         deviance information criterion of one or two --draws
      backtest    rolling one-step-ahead forecasts over --window
      diagnose    term structure statistics and price moment curves
      self-check  compare against the reference implementations
    """),
    epilog=dedent("""
    All tables are written as CSV files to the output directory, each
    starting with # lines recording the command, seed and input hashes.
    """)
)

positional = parser.add_argument_group("Positional arguments")
positional.add_argument(
    "command",
    metavar="COMMAND",
    nargs="?",
    choices=COMMANDS,
    help="""
    The command to run, see above.
    """
)
positional.add_argument(
    "inputs",
    metavar="INPUT",
    nargs="*",
    help="""
    Input panel file: a CSV with columns date, contract, price or
    log_price and optionally maturity_days. Without maturities a
    schedule file with the same name and a .schedule suffix is read.
    """
)

general = parser.add_argument_group("General options")
general.add_argument(
    "-h", "--help",
    action="store_true",
    help="""
    Show this help message and exit.
    """
)
general.add_argument(
    "-V", "--version",
    action="version",
    version="%(prog)s {0}".format(TERMSV_VERSION),
    help="""
    Show version number and exit.
    """
)
general.add_argument(
    "--config",
    action="append",
    metavar="FILENAME",
    help="""
    Load options from this config file.

    Can be repeated to load multiple files, in which case
    the options are merged on top of each other where the
    last config has highest priority.
    """
)
general.add_argument(
    "-l", "--loglevel",
    metavar="LEVEL",
    default="info",
    help="""
    Set the log message threshold.

    Valid levels are: none, error, warning, info, debug
    """
)
general.add_argument(
    "-Q", "--quiet",
    action="store_true",
    help="""
    Hide all log output.

    Alias for "--loglevel none".
    """
)
general.add_argument(
    "--self-check",
    action="store_true",
    help="""
    Alias for the self-check command.
    """
)
general.add_argument(
    "--seed",
    metavar="SEED",
    type=num(int, min=-1),
    help="""
    Master seed of every random stream, default: 0
    """
)
general.add_argument(
    "--threads",
    metavar="COUNT",
    type=num(int, min=0),
    help="""
    Size of the thread pools used for particle filter replicates,
    DIC evaluations and backtest origins, default: 1
    """
)
general.add_argument(
    "-o", "--out",
    metavar="DIRECTORY",
    help="""
    Directory the output files are written to. Defaults to
    $TERMSV_OUTPUT_DIR or the current directory.
    """
)

model_group = parser.add_argument_group("Model options")
model_group.add_argument(
    "--model",
    metavar="{3f,4f}",
    type=model,
    default=4,
    help="""
    Three factor Nelson-Siegel or four factor Svensson model,
    default: 4f
    """
)
model_group.add_argument(
    "--sv",
    metavar="{on,off}",
    type=switch,
    default=True,
    help="""
    Wishart stochastic volatility on or off, default: on
    """
)
model_group.add_argument(
    "--params",
    metavar="FILENAME",
    help="""
    A key=value parameter file as written by simulate.
    """
)
model_group.add_argument(
    "--draws",
    metavar="FILENAME",
    action="append",
    help="""
    A draws file as written by estimate. The dic command accepts it
    twice to compare two models.
    """
)

sim = parser.add_argument_group("Simulation options")
sim.add_argument(
    "--dates",
    metavar="COUNT",
    type=num(int, min=1),
    default=1000,
    help="""
    Number of simulated dates, default: 1000
    """
)
sim.add_argument(
    "--contracts",
    metavar="COUNT",
    type=num(int, min=0),
    default=24,
    help="""
    Number of simulated contracts, default: 24
    """
)
sim.add_argument(
    "--schedule",
    metavar="FILENAME",
    help="""
    A key=value maturity schedule file with base_maturity_days,
    contract_spacing_days, rollover_period_days and optionally
    rollover_offset_days.
    """
)
sim.add_argument(
    "--start-date",
    metavar="DATE",
    default="2000-01-03",
    help="""
    First simulated date, default: 2000-01-03
    """
)

gibbs = parser.add_argument_group("Sampler options")
gibbs.add_argument(
    "--iters",
    metavar="COUNT",
    type=num(int, min=0),
    help="""
    Gibbs cycles including burn-in, default: 11000
    """
)
gibbs.add_argument(
    "--burnin",
    metavar="COUNT",
    type=num(int, min=-1),
    help="""
    Burn-in cycles, default: 1000
    """
)
gibbs.add_argument(
    "--keep-states",
    metavar="COUNT",
    type=num(int, min=-1),
    help="""
    Write the last COUNT full state paths to states.bin.
    """
)

smc = parser.add_argument_group("Likelihood options")
smc.add_argument(
    "--particles",
    metavar="COUNT",
    type=num(int, min=99),
    help="""
    Particles of the likelihood filter, default: 10000
    """
)
smc.add_argument(
    "--replicates",
    metavar="COUNT",
    type=num(int, min=0),
    help="""
    Independent filter runs; their mean is the estimate and their
    standard deviation is reported, default: 1
    """
)
smc.add_argument(
    "--resample",
    metavar="{always,adaptive}",
    choices=["always", "adaptive"],
    help="""
    Resample every period or only when the effective sample size
    falls below half the particles, default: always
    """
)
smc.add_argument(
    "--dic-thin",
    metavar="N",
    type=num(int, min=0),
    help="""
    Evaluate the likelihood at every N-th draw, default: 20
    """
)
smc.add_argument(
    "--dic-draws",
    metavar="COUNT",
    type=num(int, min=0),
    help="""
    Evaluate at most COUNT draws.
    """
)

forecast = parser.add_argument_group("Forecast options")
forecast.add_argument(
    "--window",
    metavar="START:END",
    type=window,
    default=(None, None),
    help="""
    Zero based indices of the forecast targets, END exclusive.
    Defaults to the last 250 dates.
    """
)
forecast.add_argument(
    "--var-levels",
    metavar="LEVELS",
    type=levels,
    help="""
    Comma separated VaR levels, default: 0.01,0.05,0.10
    """
)
forecast.add_argument(
    "--portfolio",
    metavar="NAME",
    action="append",
    help="""
    Portfolio to evaluate: equal, bullspread or a file of comma
    separated weights. Can be repeated, default: equal and bullspread
    """
)
forecast.add_argument(
    "--forecast-draws",
    metavar="COUNT",
    type=num(int, min=0),
    help="""
    Factor draws per forecast origin, at least 100/LEVEL for the lowest
    VaR level, default: 10000
    """
)
forecast.add_argument(
    "--backtest-update",
    metavar="{warm,full}",
    choices=["warm", "full"],
    help="""
    Re-estimate with short chains started from the previous origin
    (warm) or a full chain per origin (full), default: warm
    """
)
forecast.add_argument(
    "--backtest-cycles",
    metavar="COUNT",
    type=num(int, min=1),
    help="""
    Cycles of each warm started chain, default: 500
    """
)
forecast.add_argument(
    "--benchmark-lambdas",
    metavar="LAMBDAS",
    type=comma_list,
    help="""
    Decay rates used to extract the benchmark factors, defaults to
    the posterior mean of the model.
    """
)
forecast.add_argument(
    "--reference",
    metavar="FILENAME",
    help="""
    forecasts.csv of another backtest; the accumulated difference of
    the log predictive likelihoods is written to accumulated.csv.
    """
)


__all__ = ["parser"]
