"""Module-tagged log output.

Messages are written as ``[module][level] message`` lines. Long running
jobs (chains, filters, backtests) report through :meth:`LoggerModule.timed`
so their wall-clock time shows up at info level.
"""

import sys
import time

from contextlib import contextmanager
from threading import Lock

from .exceptions import DomainError


class Logger(object):
    Levels = ["none", "error", "warning", "info", "debug"]
    Format = "[{module}][{level}] {msg}\n"

    def __init__(self, output=None, level="none"):
        self.output = output or sys.stderr
        self.level = 0
        self.lock = Lock()
        self.set_level(level)

    def new_module(self, module):
        return LoggerModule(self, module)

    def set_level(self, level):
        """Sets the threshold by name (any case) or index."""
        if isinstance(level, int) and 0 <= level < len(Logger.Levels):
            self.level = level
            return

        name = str(level).strip().lower()
        if name not in Logger.Levels:
            raise DomainError("Unknown log level: {0}".format(level))

        self.level = Logger.Levels.index(name)

    def set_output(self, output):
        self.output = output

    def msg(self, module, level, msg, *args, **kwargs):
        if self.level < level:
            return

        if args or kwargs:
            msg = msg.format(*args, **kwargs)
        line = Logger.Format.format(module=module, level=Logger.Levels[level], msg=msg)

        # worker threads of the filter and backtest pools share the output
        with self.lock:
            self.output.write(line)
            if hasattr(self.output, "flush"):
                self.output.flush()


class LoggerModule(object):
    def __init__(self, manager, module):
        self.manager = manager
        self.module = module

    def new_module(self, module):
        """Returns a handle for a submodule, e.g. dic.smc."""
        return LoggerModule(self.manager, "{0}.{1}".format(self.module, module))

    def enabled(self, level):
        return self.manager.level >= Logger.Levels.index(level)

    def error(self, msg, *args, **kwargs):
        self.manager.msg(self.module, 1, msg, *args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self.manager.msg(self.module, 2, msg, *args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self.manager.msg(self.module, 3, msg, *args, **kwargs)

    def debug(self, msg, *args, **kwargs):
        self.manager.msg(self.module, 4, msg, *args, **kwargs)

    @contextmanager
    def timed(self, label, level="info"):
        """Logs ``label`` with the elapsed seconds when the block exits
        normally. Failures are left to the caller to report."""
        start = time.perf_counter()
        yield
        self.manager.msg(self.module, Logger.Levels.index(level),
                         "{0} took {1:.2f} s", label, time.perf_counter() - start)


def silent(module):
    """A handle on a logger that never writes anything."""
    return Logger().new_module(module)


__all__ = ["Logger", "LoggerModule", "silent"]
