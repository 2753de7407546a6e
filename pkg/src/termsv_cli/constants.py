import os

from termsv import __version__ as TERMSV_VERSION

XDG_CONFIG_HOME = os.environ.get("XDG_CONFIG_HOME", "~/.config")
CONFIG_FILES = [
    os.path.expanduser(XDG_CONFIG_HOME + "/termsv/config"),
    os.path.expanduser("~/.termsvrc")
]

OUTPUT_DIR_ENV = "TERMSV_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "."

COMMANDS = ["simulate", "estimate", "loglik", "dic", "backtest", "diagnose",
            "self-check"]

#: Contracts whose price moment curves are written by diagnose
DIAGNOSE_CONTRACTS = [1, 4, 16, 24]
DIAGNOSE_DAYS = 43

#: Parameters the simulate command uses without a parameter file
SIMULATION_DEFAULTS = {
    "lambda1": 0.0036,
    "lambda2": 0.0158,
    "sigma_y": 0.0032,
    "nu": 24.0,
    "beta0": (4.0, -0.1, 0.05, 0.02),
    "innovation_sd": (0.02, 0.01, 0.01, 0.01),
}

__all__ = [
    "CONFIG_FILES", "COMMANDS", "DEFAULT_OUTPUT_DIR", "DIAGNOSE_CONTRACTS",
    "DIAGNOSE_DAYS", "OUTPUT_DIR_ENV", "SIMULATION_DEFAULTS", "TERMSV_VERSION"
]
