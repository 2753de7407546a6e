"""Provenance headers and table output.

Every artifact starts with ``#`` comment lines naming the termsv
version, the command line, the seed and the SHA-256 digest of each
input file. The readers in :mod:`termsv.data` and :mod:`termsv.gibbs`
skip these lines.
"""

import hashlib

from collections import OrderedDict

from . import __version__
from .exceptions import DataError

__all__ = ["file_digest", "provenance", "write_header", "write_table",
           "write_text", "read_provenance"]

HEADER_PREFIX = "# "


def file_digest(path, blocksize=65536):
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as fd:
            for block in iter(lambda: fd.read(blocksize), b""):
                digest.update(block)
    except OSError as err:
        raise DataError("Unable to hash {0}: {1}".format(path, err))

    return digest.hexdigest()


def provenance(command, seed=None, inputs=(), **extra):
    """Header lines for an artifact. No timestamps are included, so
    reruns with the same inputs produce identical files."""
    lines = ["termsv {0}".format(__version__),
             "command: {0}".format(command)]
    if seed is not None:
        lines.append("seed: {0}".format(seed))
    for path in inputs:
        lines.append("input: {0} sha256={1}".format(path, file_digest(path)))
    for key, value in sorted(extra.items()):
        lines.append("{0}: {1}".format(key, value))

    return lines


def write_header(fd, header):
    for line in header or []:
        fd.write(HEADER_PREFIX + line + "\n")


def write_table(frame, path, header=None, float_format="%.10g"):
    """Writes a DataFrame as CSV after the header lines."""
    with open(path, "w") as fd:
        write_header(fd, header)
        frame.to_csv(fd, index=False, float_format=float_format)


def write_text(text, path, header=None):
    with open(path, "w") as fd:
        write_header(fd, header)
        fd.write(text)


def read_provenance(path):
    """The ``key: value`` pairs of an artifact header."""
    values = OrderedDict()
    with open(path) as fd:
        for line in fd:
            if not line.startswith(HEADER_PREFIX):
                break
            key, sep, value = line[len(HEADER_PREFIX):].rstrip("\n").partition(": ")
            if sep:
                values.setdefault(key, value)
            else:
                values["version"] = key.partition(" ")[2]

    return values
