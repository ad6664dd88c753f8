"""Exception types raised by the library."""


class CavityEntropyError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(CavityEntropyError, ValueError):
    pass


class TruncationError(CavityEntropyError):
    """Fock-space cutoff too small for the requested state."""


class PositivityError(CavityEntropyError):
    """A density matrix has an eigenvalue below the allowed roundoff window."""


class IntegrationError(CavityEntropyError):
    """The adaptive integrator could not make progress."""


class NormalizationError(CavityEntropyError, ValueError):
    pass


class RootBracketError(CavityEntropyError):
    pass


class DegenerateEvidence(CavityEntropyError):
    """Observed outcome has zero probability under the prior."""


class InvalidStateError(CavityEntropyError, ValueError):
    """Matrix violates the Hermiticity or trace invariants of a state."""
