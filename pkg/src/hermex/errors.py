"""Exception types shared across the package."""


class HermexError(Exception):
    """Base class for package errors."""


class DimensionError(HermexError, ValueError):
    """Operands act on registers of incompatible size."""


class CapacityError(HermexError, ValueError):
    """Requested dense object is too large to materialize."""


class ParseError(HermexError, ValueError):
    """Malformed text input (Pauli sums, circuits, matrices, parameter files)."""


class NotHermitianError(HermexError, ValueError):
    """Operator expected to be Hermitian is not."""


class UnsupportedAnsatzError(HermexError, ValueError):
    """Circuit structure does not match what an operation requires."""
