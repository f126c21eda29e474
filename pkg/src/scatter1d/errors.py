"""Exception hierarchy.

Two families matter to callers: ValidationError (bad input data or bad
configuration, CLI exit code 1) and NumericalError (a computation that
cannot be completed reliably, CLI exit code 2).
"""

from __future__ import annotations


class ScatterError(Exception):
    """Base class for all package errors."""


class ValidationError(ScatterError):
    """Invalid input data or configuration."""


class NonSymmetricMatrix(ValidationError):
    """A strength or segment matrix is not symmetric within tolerance."""


class SupportOutsideRange(ValidationError):
    """A segment or delta lies outside [-R, R]."""


class OverlappingSegments(ValidationError):
    """Two piecewise-constant segments overlap."""


class OverlappingCells(ValidationError):
    """Translated composition cells have overlapping supports."""


class MixedWavenumbers(ValidationError):
    """Transfer factors at different k cannot be composed."""


class NumericalError(ScatterError):
    """A numerical procedure failed or left its validity domain."""


class ConvergenceFailure(NumericalError):
    """An iterative kernel did not converge."""


class NonFiniteState(NumericalError):
    """Propagation produced overflow or NaN."""


class SingularCore(NumericalError):
    """The outgoing-wave matching matrix is numerically singular."""


class SingularStrength(NumericalError):
    """A closed form requires inverting a singular strength matrix."""


class ExtrapolationUnstable(NumericalError):
    """Successive threshold extrapolation estimates diverge."""


class NonUnitaryInput(NumericalError):
    """An S matrix fails its unitarity precondition."""


class GridTooCoarse(NumericalError):
    """A scan grid is too coarse to track the quantity reliably."""


class AnchorNotConverged(NumericalError):
    """The large-k phase anchor is not yet close to zero."""


class SingularTransmission(NumericalError):
    """tau is numerically singular; no transfer factor exists."""


class SingularBlock(NumericalError):
    """A transfer-factor block required for amplitude recovery is singular."""
