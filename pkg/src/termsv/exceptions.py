class TermSVError(Exception):
    """Any error caused by termsv will be caught
       with this exception."""


class DataError(TermSVError):
    """Panel or schedule validation error."""


class LoadError(DataError):
    """A panel file could not be turned into a complete panel."""

    def __init__(self, msg, date=None, contract=None):
        self.date = date
        self.contract = contract
        DataError.__init__(self, msg)

    @classmethod
    def missing_cell(cls, date, contract):
        msg = "Missing observation for (date {0}, contract {1})".format(date, contract)
        return cls(msg, date=date, contract=contract)


class InsufficientDataError(DataError):
    """Too few observations to compute a statistic."""


class DomainError(TermSVError):
    """Parameter outside its admissible domain."""


class NumericalError(TermSVError):
    """Numerical failure, e.g. a matrix that is not positive definite."""

    def __init__(self, msg, pivot=None):
        self.pivot = pivot
        if pivot is not None:
            msg = "{0} (pivot {1})".format(msg, pivot)
        TermSVError.__init__(self, msg)


class ParticleCollapseError(NumericalError):
    def __init__(self, t):
        self.t = t
        NumericalError.__init__(self, "All particle weights vanished at t={0}".format(t))


class SamplerError(TermSVError):
    """A Gibbs cycle failed."""

    def __init__(self, cycle, block, err):
        self.cycle = cycle
        self.block = block
        self.err = err
        msg = "Cycle {0} failed in block '{1}': {2}".format(cycle, block, err)
        TermSVError.__init__(self, msg)


class EvaluationError(TermSVError):
    """A likelihood evaluation failed for one posterior draw."""

    def __init__(self, draw, err):
        self.draw = draw
        self.err = err
        TermSVError.__init__(self, "Likelihood evaluation failed for draw {0}: {1}".format(draw, err))


class DegenerateInputError(TermSVError):
    """Input series is constant or otherwise degenerate."""


class ForecastError(TermSVError):
    """Forecast related error."""


__all__ = ["TermSVError", "DataError", "LoadError", "InsufficientDataError",
           "DomainError", "NumericalError", "ParticleCollapseError",
           "SamplerError", "EvaluationError", "DegenerateInputError",
           "ForecastError"]
