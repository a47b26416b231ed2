"""Exception hierarchy shared by the package."""


class ElasticMeshError(Exception):
    """Base class for all errors raised by elasticmesh."""


class GridError(ElasticMeshError, ValueError):
    """An image or height field violates its shape/value invariants."""


class CoordinateError(ElasticMeshError, IndexError):
    """A pixel coordinate lies outside the grid."""


class InstabilityError(ElasticMeshError, ArithmeticError):
    """The relaxation diverged, or its parameters cannot converge."""


class PgmParseError(ElasticMeshError, ValueError):
    """Malformed PGM input. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class PgmEncodeError(ElasticMeshError, ValueError):
    """A grid cannot be encoded as 8-bit PGM."""
