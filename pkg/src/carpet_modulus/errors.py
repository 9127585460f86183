"""Exception hierarchy shared by all modules."""


class CarpetError(Exception):
    """Base class."""


class DomainError(CarpetError, ValueError):
    """An input lies outside the domain of an operation."""


class ResolutionError(CarpetError, ValueError):
    """The grid resolution cannot represent a feature of the scene."""


class ResourceError(CarpetError, RuntimeError):
    """A size cap (depth, enumeration count) was exceeded."""


class TopologyError(CarpetError, ValueError):
    """Requested boundary components cannot be connected."""


class ConvergenceError(CarpetError, RuntimeError):
    """Iteration cap hit; ``partial`` holds the last iterate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
