"""Exception hierarchy shared across the package."""


class GranucastError(Exception):
    """Base class for all errors raised by granucast."""
