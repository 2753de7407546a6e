"""This module provides an API to validate and convert the flat
   key=value blocks used for parameter files, schedule sidecars and
   configuration files.


   Example usage:

   >>> validate(all(transform(int), positive), "22")
   22

   >>> validate({"nu": transform(float)}, {"nu": "27.72"})
   {'nu': 27.72}

   >>> validate({"nu": transform(float)}, {})
   ValueError: Key 'nu' not found in {}

"""

import math

from functools import singledispatch

from .exceptions import DataError

__all__ = [
    "any", "all", "optional", "transform", "floats", "positive", "finite",
    "boolean", "validate", "parse_keyvalue"
]

# References to original functions that we override in this module
_all = all
_map = map


class any(tuple):
    """At least one of the schemas must be valid."""
    def __new__(cls, *args):
        return super(any, cls).__new__(cls, args)


class all(tuple):
    """All schemas must be valid."""
    def __new__(cls, *args):
        return super(all, cls).__new__(cls, args)


class transform(object):
    """Applies function to value to transform it."""
    def __init__(self, func):
        self.func = func


class optional(object):
    """An optional key used in a dict."""
    def __init__(self, key):
        self.key = key


def positive(value):
    """Checks that a number is strictly positive."""
    if not value > 0:
        raise ValueError("{0!r} is not positive".format(value))
    return True


def finite(value):
    """Checks that a number, or every number in a sequence, is finite."""
    values = value if isinstance(value, (list, tuple)) else [value]
    if not _all(math.isfinite(v) for v in values):
        raise ValueError("{0!r} is not finite".format(value))
    return True


def floats(value):
    """Converts a comma separated string into a list of floats."""
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]

    return [float(v) for v in str(value).split(",") if v.strip()]


def boolean(value):
    """Converts on/off style strings into a bool."""
    if isinstance(value, bool):
        return value

    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    elif text in ("0", "false", "no", "off"):
        return False

    raise ValueError("{0!r} is not a boolean".format(value))


@singledispatch
def validate(schema, value):
    if callable(schema):
        if schema(value):
            return value
        else:
            raise ValueError("{0}({1!r}) is not true".format(schema.__name__, value))

    if schema == value:
        return value
    else:
        raise ValueError("{0!r} does not equal {1!r}".format(value, schema))


@validate.register(any)
def validate_any(schema, value):
    errors = []
    for subschema in schema:
        try:
            return validate(subschema, value)
        except (ValueError, TypeError) as err:
            errors.append(err)
    else:
        err = " or ".join(_map(str, errors))
        raise ValueError(err)


@validate.register(all)
def validate_all(schemas, value):
    for schema in schemas:
        value = validate(schema, value)

    return value


@validate.register(transform)
def validate_transform(schema, value):
    validate(callable, schema.func)
    try:
        return schema.func(value)
    except TypeError as err:
        raise ValueError(err)


@validate.register(list)
@validate.register(tuple)
def validate_sequence(schema, value):
    validate(type(schema), value)
    return type(schema)(validate(any(*schema), v) for v in value)


@validate.register(dict)
def validate_dict(schema, value):
    validate(type(schema), value)
    new = type(schema)()

    for key, subschema in schema.items():
        if isinstance(key, optional):
            if key.key not in value:
                continue
            key = key.key

        if key not in value:
            raise ValueError("Key '{0}' not found in {1!r}".format(key, value))

        try:
            new[key] = validate(subschema, value[key])
        except ValueError as err:
            raise ValueError("Unable to validate key '{0}': {1}".format(key, err))

    return new


@validate.register(type)
def validate_type(schema, value):
    if isinstance(value, schema):
        return value
    else:
        raise ValueError(
            "Type of {0!r} should be '{1}' but is '{2}'".format(
                value, schema.__name__, type(value).__name__
            )
        )


def parse_keyvalue(data, name="key=value block", exception=DataError, schema=None):
    """Parses a key=value text block into a dict.

    Blank lines and lines starting with # are skipped. Wraps errors in
    custom exception with the offending line in the message.
    """
    values = {}
    for lineno, line in enumerate(data.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue

        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise exception("Unable to parse {0}: line {1} is not "
                            "key=value ({2!r})".format(name, lineno, line))

        values[key.strip()] = value.strip()

    if schema:
        try:
            values = validate(schema, values)
        except ValueError as err:
            raise exception("Unable to validate {0}: {1}".format(name, err))

    return values
