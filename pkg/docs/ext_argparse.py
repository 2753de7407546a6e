"""Renders the termsv argument parser as option directives.

The parser module is imported with argparse.ArgumentParser swapped for
a recorder, so no private argparse structures are touched. Help texts
get light pre-processing: defaults are set in bold and option names
become cross references.
"""

import argparse
import re

from collections import namedtuple
from textwrap import dedent

from docutils import nodes
from docutils.parsers.rst import Directive
from docutils.parsers.rst.directives import unchanged
from docutils.statemachine import ViewList
from sphinx.util.nodes import nested_parse_with_titles


_ArgumentParser = argparse.ArgumentParser
_Argument = namedtuple("Argument", "args options")

_default_re = re.compile(r"default: (.+)$", re.MULTILINE)
_option_re = re.compile(r"(--[\w-]+)")


class RecordingParser(object):
    def __init__(self, *args, **kwargs):
        self.args = args
        self.kwargs = kwargs
        self.groups = []
        self.arguments = []

    def add_argument(self, *args, **options):
        if options.get("help") != argparse.SUPPRESS:
            self.arguments.append(_Argument(args, options))

    def add_argument_group(self, *args, **options):
        group = RecordingParser(*args, **options)
        self.groups.append(group)
        return group


def get_parser(module_name, attr):
    argparse.ArgumentParser = RecordingParser
    try:
        module = __import__(module_name, globals(), locals(), [attr])
    finally:
        argparse.ArgumentParser = _ArgumentParser

    return getattr(module, attr)


def indent(value, length=4):
    space = " " * length
    return "\n".join(space + line for line in value.splitlines())


class ArgparseDirective(Directive):
    has_content = True
    option_spec = {
        "module": unchanged,
        "attr": unchanged,
    }

    def process_help(self, help):
        help = dedent(help).strip()
        help = _default_re.sub(r"Default: **\1**", help)
        help = _option_re.sub(
            lambda m: (":option:`{0}`".format(m.group(1))
                       if m.group(1) in self._available_options
                       else m.group(1)),
            help
        )

        return indent(help)

    def format_option(self, arg):
        metavar = arg.options.get("metavar")
        if not metavar:
            return ", ".join(arg.args)

        if arg.options.get("nargs") == "?":
            metavar = "[{0}]".format(metavar)
        elif arg.options.get("nargs") == "*":
            metavar = "[{0} ...]".format(metavar)

        names = []
        for name in arg.args:
            if name.startswith("-"):
                names.append("{0} {1}".format(name, metavar))
            else:
                names.append(metavar)

        return ", ".join(names)

    def generate_group_rst(self, group):
        for arg in group.arguments:
            yield ".. option:: {0}".format(self.format_option(arg))
            yield ""
            for line in self.process_help(arg.options.get("help", "")).split("\n"):
                yield line
            yield ""

    def generate_parser_rst(self, parser):
        for group in parser.groups:
            title = group.args[0]
            yield ""
            yield title
            yield "^" * len(title)
            for line in self.generate_group_rst(group):
                yield line

    def run(self):
        parser = get_parser(self.options.get("module"), self.options.get("attr"))

        self._available_options = []
        for group in parser.groups:
            for arg in group.arguments:
                self._available_options += arg.args

        node = nodes.section()
        node.document = self.state.document
        result = ViewList()
        for line in self.generate_parser_rst(parser):
            result.append(line, "argparse")

        nested_parse_with_titles(self.state, result, node)
        return node.children


def setup(app):
    app.add_directive("argparse", ArgparseDirective)
