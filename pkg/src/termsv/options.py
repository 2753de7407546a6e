from .exceptions import DomainError


def _normalize(key):
    return key.strip().lower().replace("_", "-")


class Options(object):
    """A fixed set of named options with defaults.

    Dashes and underscores are interchangeable in keys, so
    ``smc_particles`` and ``smc-particles`` name the same option.
    String values of keys with a parser are converted on set.
    """

    def __init__(self, defaults=None, parsers=None):
        self.defaults = dict((_normalize(k), v) for k, v in (defaults or {}).items())
        self.parsers = dict((_normalize(k), f) for k, f in (parsers or {}).items())
        self.options = self.defaults.copy()

    def _key(self, key):
        name = _normalize(key)
        if name not in self.defaults:
            raise DomainError("Unknown option: {0}".format(key))

        return name

    def set(self, key, value):
        key = self._key(key)
        parser = self.parsers.get(key)
        if parser is not None and isinstance(value, str):
            try:
                value = parser(value)
            except ValueError as err:
                raise DomainError("Invalid value for {0}: {1}".format(key, err))

        self.options[key] = value

    def get(self, key):
        return self.options[self._key(key)]

    def update(self, values):
        for key, value in values.items():
            self.set(key, value)

    def items(self):
        return sorted(self.options.items())


__all__ = ["Options"]
