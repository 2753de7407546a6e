import os

from termsv.data import save_panel
from termsv.gibbs import save_draws, save_states
from termsv.io import write_table, write_text


class Output(object):
    """An output directory. Every file written through it starts with
    the provenance header."""

    def __init__(self, directory, header=None):
        self.directory = directory
        self.header = list(header or [])
        self.opened = False
        self.written = []

    def open(self):
        if not os.path.isdir(self.directory):
            os.makedirs(self.directory)
        if not os.access(self.directory, os.W_OK):
            raise IOError("Output directory {0} is not writable".format(self.directory))

        self.opened = True

    def filename(self, name):
        return os.path.join(self.directory, name)

    def _target(self, name):
        if not self.opened:
            raise IOError("Output is not opened")

        path = self.filename(name)
        self.written.append(path)
        return path

    def table(self, name, frame):
        write_table(frame, self._target(name), self.header)

    def text(self, name, text):
        write_text(text, self._target(name), self.header)

    def panel(self, name, panel, schedule=None):
        save_panel(panel, self._target(name), schedule, self.header)

    def draws(self, name, sample):
        save_draws(sample, self._target(name), self.header)

    def states(self, name, states):
        # binary, no header
        save_states(states, self._target(name))


__all__ = ["Output"]
