"""Exception hierarchy for the locp package.

Every failure mode of a construction routine raises a subclass of
:class:`LocpError`.  Verification routines never raise on a mathematical
failure; they return reports.  Exceptions are reserved for malformed input
and inconsistent preconditions.
"""


class LocpError(Exception):
    """Base class for all locp errors."""


class DimensionError(LocpError):
    """Shape or dimension mismatch (non-monotone level dims, bad coords length...)."""


class FrameError(LocpError):
    """A frame matrix is not unitary to tolerance."""


class LevelError(LocpError):
    """A level index is out of range."""


class CompatibilityError(LocpError):
    """An operator violates flag compatibility at some level."""

    def __init__(self, level: int, residual: float, message: str = ""):
        self.level = level
        self.residual = residual
        super().__init__(
            message or f"flag compatibility violated at level {level} "
                       f"(residual {residual:.3e})")


class ValidationError(LocpError):
    """Generic structural validation failure."""


class ClosureError(LocpError):
    """A span fails to close under products or the module action."""


class InnerProductError(LocpError):
    """A module inner product lands outside the coefficient algebra."""


class DegeneracyError(LocpError):
    """Linearly dependent or degenerate basis."""


class PositivityError(LocpError):
    """A matrix required to be positive semidefinite is not."""


class ContractionError(LocpError):
    """A matrix required to be a contraction is not."""


class PreconditionError(LocpError):
    """A required certificate is absent or failed."""


class MismatchError(LocpError):
    """Two objects that must share data (algebra, flag, witness) do not."""


class MapMismatchError(MismatchError):
    """Two representations do not dilate the same map."""


class CertificateError(LocpError):
    """A map fails the certificate required for a construction."""


class RankError(LocpError):
    """A Gram matrix is inconsistent with its positivity certificate."""


class DominationError(LocpError):
    """Claimed domination between two maps does not hold."""


class SpectrumError(LocpError):
    """An operator's spectrum violates the required interval."""


class CommutantError(LocpError):
    """An operator is not in the required commutant."""


class EmptyCommutantError(LocpError):
    """Cannot sample from an empty commutant basis."""


class EquivalenceError(LocpError):
    """Two module maps do not have equal inducing maps."""


class ParamError(LocpError):
    """Invalid generator/CLI parameters."""


class ParseError(LocpError):
    """Malformed instance file."""
