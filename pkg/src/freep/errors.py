"""Exception hierarchy shared by all freep modules."""


class FreepError(Exception):
    """Base class for every error raised by freep."""


class SpaceStructureError(FreepError):
    """Distance table is malformed (asymmetric, negative, zero off-diagonal...)."""


class TriangleError(FreepError):
    """A distance table violates the p-triangle inequality."""

    def __init__(self, message, triple=None, ratio=None):
        super().__init__(message)
        self.triple = triple
        self.ratio = ratio


class TreeError(FreepError):
    """Weighted tree input is disconnected, cyclic or has bad weights."""


class SizeCapError(FreepError):
    """An instance exceeds a configured size cap."""


class ExponentError(FreepError):
    """Exponent outside of its admissible range."""


class SpaceMismatchError(FreepError):
    """Molecules living on different spaces were combined."""


class MapError(FreepError):
    """A point map is not defined where it needs to be."""


class ConstructionError(FreepError):
    """A builder could not produce a verified object."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class AnchorError(ConstructionError):
    """No admissible anchor point for a Whitney set at the requested nu."""
