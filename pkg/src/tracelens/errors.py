"""Exception hierarchy shared across the package."""


class TraceLensError(Exception):
    """Base class for all package errors."""


class ParseError(TraceLensError):
    """Document-level syntax error; `offset` is the byte offset when known."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(TraceLensError):
    """Unknown trace batch format tag."""


class TraceValidationError(TraceLensError):
    """A span set cannot form a valid single-rooted trace."""


class EmptySelectionError(TraceLensError):
    """A (root, time range) selection matched no requests."""


class UnknownPathError(TraceLensError):
    """A path was requested that does not exist in the aggregated tree."""


class StoreError(TraceLensError):
    """Store I/O or consistency failure."""


class StoreVersionError(StoreError):
    """On-disk store format version is not recognized by this reader."""


class TopologyError(TraceLensError):
    """Invalid synthetic topology or injection specification."""
