"""Exception types shared across the package."""


class RcofError(Exception):
    """Base class for all errors raised by :mod:`rcof`."""


class SingularMatrix(RcofError, ArithmeticError):
    """A square matrix over Z_p has rank below its dimension."""


class DimensionMismatch(RcofError, ValueError):
    pass


class NotInConstellation(RcofError, ValueError):
    pass


class DegenerateBasis(RcofError, ValueError):
    """Basis columns are (numerically) linearly dependent."""


class EmptySphere(RcofError, ValueError):
    pass


class SingularChannel(RcofError, ValueError):
    pass


class RankDeficient(RcofError, ArithmeticError):
    """The system matrix is not invertible over the relevant field."""


class InvalidBackhaul(RcofError, ValueError):
    pass


class InstanceTooLarge(RcofError, ValueError):
    pass


class ConfigError(RcofError, ValueError):
    """Invalid experiment configuration.

    The message starts with the offending field path, e.g.
    ``sweep.grid: values must be sorted ascending``.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
