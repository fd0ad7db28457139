"""Exception types raised by certbound."""


class CertboundError(Exception):
    """Base class for all certbound errors."""


class DimensionMismatchError(CertboundError, ValueError):
    """Operands act on different numbers of qubits."""


class CapExceededError(CertboundError, ValueError):
    """Requested qubit count is beyond the dense-computation cap."""


class ZeroOperatorError(CertboundError, ValueError):
    """An operation needs a nonzero operator (normalized Pauli coefficients)."""


class DivergenceError(CertboundError, RuntimeError):
    """A Monte-Carlo integral failed its stability check."""
