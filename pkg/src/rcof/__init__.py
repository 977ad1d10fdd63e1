"""Reverse compute-and-forward and integer-forcing beamforming for downlink DAS."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateBasis,
    DimensionMismatch,
    EmptySphere,
    InstanceTooLarge,
    InvalidBackhaul,
    NotInConstellation,
    RankDeficient,
    RcofError,
    SingularChannel,
    SingularMatrix,
)
from .rates import RateReport, Scheme  # noqa: E402
from .scalar_lattice import NestedLatticePair  # noqa: E402
from .zp_field import PrimeField  # noqa: E402

__all__ = [
    "ConfigError",
    "DegenerateBasis",
    "DimensionMismatch",
    "EmptySphere",
    "InstanceTooLarge",
    "InvalidBackhaul",
    "NestedLatticePair",
    "NotInConstellation",
    "PrimeField",
    "RankDeficient",
    "RateReport",
    "RcofError",
    "Scheme",
    "SingularChannel",
    "SingularMatrix",
]
