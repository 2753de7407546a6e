import sys


class ConsoleOutput(object):
    """Writes command results and log lines to one stream."""

    def __init__(self, output, session):
        self.session = session
        self.logger = session.logger.new_module("cli")

        self.set_output(output)

    def set_level(self, level):
        self.session.set_loglevel(level)

    def set_output(self, output):
        self.output = output
        self.session.set_logoutput(output)

    def msg(self, msg, *args, **kwargs):
        formatted = msg.format(*args, **kwargs)
        formatted = "{0}\n".format(formatted)

        self.output.write(formatted)

    def table(self, frame, columns=None, digits=4):
        """Prints the given columns of a DataFrame without its index."""
        if columns is not None:
            frame = frame[[c for c in columns if c in frame.columns]]

        text = frame.to_string(index=False, na_rep="-",
                               float_format=lambda v: "{0:.{1}g}".format(v, digits))
        self.msg("{0}", text)

    def exit(self, msg, *args, **kwargs):
        formatted = msg.format(*args, **kwargs)
        self.msg("error: {0}", formatted)

        sys.exit(1)


__all__ = ["ConsoleOutput"]
